#include "conicfit/conic_geometry.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace conicfit {

namespace {

void check_points(std::span<const Point2> points, std::span<const double> weights) {
  if (points.empty()) fail_input("no data");
  if (points.size() != weights.size()) fail_input("points and weights differ in length");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) fail_input("non-finite point");
    if (!(weights[i] > 0) || !std::isfinite(weights[i])) fail_input("invalid weight");
  }
}

std::vector<double> weights_from_gradients(std::vector<double> grad_sq) {
  const std::size_t n = grad_sq.size();
  std::vector<double> sorted = grad_sq;
  std::sort(sorted.begin(), sorted.end());
  if (!(sorted.back() > 0)) fail_numerical("all gradients vanish");
  double median = 0.5 * (sorted[(n - 1) / 2] + sorted[n / 2]);
  if (!(median > 0)) median = sorted.back();
  // A vanishing gradient would give one point unbounded weight.
  const double floor = 1e-8 * median;

  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 1.0 / (static_cast<double>(n) * std::max(grad_sq[i], floor));
  return w;
}

}  // namespace

ConicVector curvature_correct(const ConicVector& g, double sigma2) {
  if (sigma2 < 0) fail_input("negative variance");
  ConicVector out = g;
  out(5) += sigma2 * (g(0) + g(2));
  return out;
}

std::vector<ConicVector> design_vectors(std::span<const Point2> points) {
  std::vector<ConicVector> d;
  d.reserve(points.size());
  for (const auto& p : points) d.push_back(design_vector(p));
  return d;
}

SymMatrix6 build_conic_scatter(std::span<const Point2> points, std::span<const double> weights) {
  check_points(points, weights);
  const auto designs = design_vectors(points);
  return build_scatter<double, kConicDim>(designs, weights).s;
}

SymMatrix6 build_constraint_cn(std::span<const Point2> points, std::span<const double> weights) {
  check_points(points, weights);
  const auto designs = design_vectors(points);
  const auto order = canonical_order<double, kConicDim>(designs, weights);
  const SymMatrix6 upper = detail::pairwise_sum<SymMatrix6>(order, [&](std::size_t i) -> SymMatrix6 {
    const DesignGradient grad = design_gradient(points[i]);
    return (weights[i] * grad) * grad.transpose();
  });
  SymMatrix6 cn = upper.selfadjointView<Eigen::Upper>();
  // Gradients have a structurally zero constant component.
  cn.row(5).setZero();
  cn.col(5).setZero();
  return cn;
}

std::string_view to_string(ConicClass c) {
  switch (c) {
    case ConicClass::Ellipse: return "ellipse";
    case ConicClass::Hyperbola: return "hyperbola";
    case ConicClass::Parabola: return "parabola";
    case ConicClass::Degenerate: return "degenerate";
  }
  return "unknown";
}

ConicClass classify(const ConicVector& g, double tol) {
  Eigen::Matrix3d h;
  h << g(0), g(1) / 2, g(3) / 2,
       g(1) / 2, g(2), g(4) / 2,
       g(3) / 2, g(4) / 2, g(5);
  const double scale = h.norm();
  if (!(scale > 0)) return ConicClass::Degenerate;
  if (std::abs(h.determinant()) <= tol * scale * scale * scale) return ConicClass::Degenerate;
  const double disc = conic_discriminant(g);
  if (disc > tol) return ConicClass::Ellipse;
  if (disc < -tol) return ConicClass::Hyperbola;
  return ConicClass::Parabola;
}

Point2 EllipticalFrame::to_cartesian(double eta, double theta) const {
  if (circular) return center + radius * Point2(std::cos(theta), std::sin(theta));
  return center + std::cos(theta) * std::cosh(eta) * focal +
         std::sin(theta) * std::sinh(eta) * focal_perp();
}

std::pair<double, double> EllipticalFrame::to_elliptical(const Point2& p) const {
  const Point2 d = p - center;
  if (circular) return {std::log(d.norm() / radius), std::atan2(d.y(), d.x())};
  const double f2 = focal.squaredNorm();
  const std::complex<double> z(d.dot(focal) / f2, d.dot(focal_perp()) / f2);
  const std::complex<double> w = std::acosh(z);
  return {w.real(), w.imag()};
}

Point2 EllipticalFrame::curve_point(double t) const {
  if (circular) return to_cartesian(0.0, t);
  if (conic_class == ConicClass::Ellipse) return to_cartesian(coordinate, t);
  return to_cartesian(t, coordinate);
}

EllipticalFrame elliptical_frame(const ConicVector& g) {
  const ConicClass cls = classify(g);
  if (cls != ConicClass::Ellipse && cls != ConicClass::Hyperbola)
    fail_numerical("no elliptical frame");

  EllipticalFrame frame;
  frame.conic_class = cls;

  const double disc = conic_discriminant(g);
  // Stationary point of Z: [[2g1, g2], [g2, 2g3]] c = -(g4, g5).
  frame.center = Point2((g(1) * g(4) - 2 * g(2) * g(3)) / disc,
                        (g(1) * g(3) - 2 * g(0) * g(4)) / disc);
  const double k = conic_value(g, frame.center);

  Eigen::Matrix2d quad;
  quad << g(0), g(1) / 2, g(1) / 2, g(2);
  const auto eig = jacobi_eigen<double, 2>(quad);

  if (cls == ConicClass::Ellipse) {
    const double s0 = -k / eig.values(0), s1 = -k / eig.values(1);
    if (!(s0 > 0) || !(s1 > 0)) fail_numerical("no elliptical frame");
    const int major = s0 >= s1 ? 0 : 1;
    const double a = std::sqrt(std::max(s0, s1));
    const double b = std::sqrt(std::min(s0, s1));
    const Point2 axis = canonical_sign(eig.vectors.col(major).eval());
    if (a - b < 1e-9 * a) {
      frame.circular = true;
      frame.radius = a;
      frame.focal = Point2::Zero();
      frame.coordinate = 0;
      return frame;
    }
    frame.focal = std::sqrt((a - b) * (a + b)) * axis;
    frame.coordinate = std::atanh(b / a);
  } else {
    const double h = -k;
    if (h == 0) fail_numerical("no elliptical frame");
    const int transverse = eig.values(0) * h > 0 ? 0 : 1;
    const int conjugate = 1 - transverse;
    const double a2 = h / eig.values(transverse);
    const double b2 = -h / eig.values(conjugate);
    const Point2 axis = canonical_sign(eig.vectors.col(transverse).eval());
    frame.focal = std::sqrt(a2 + b2) * axis;
    frame.coordinate = std::atan2(std::sqrt(b2), std::sqrt(a2));
  }
  return frame;
}

Point2 nearest_point(const EllipticalFrame& frame, const Point2& p) {
  const double offset = (p - frame.center).norm();
  if (frame.circular) {
    if (!(offset > 1e-12 * frame.radius)) fail_numerical("ambiguous projection");
    return frame.center + frame.radius * (p - frame.center) / offset;
  }
  if (!(offset > 1e-12 * frame.focal.norm())) fail_numerical("ambiguous projection");

  const auto [eta, theta] = frame.to_elliptical(p);
  if (frame.conic_class == ConicClass::Ellipse) return frame.to_cartesian(frame.coordinate, theta);

  constexpr double half_pi = std::numbers::pi / 2;
  const double t0 = frame.coordinate;
  double branch;
  if (theta >= 0)
    branch = theta <= half_pi ? t0 : std::numbers::pi - t0;
  else
    branch = theta >= -half_pi ? -t0 : -(std::numbers::pi - t0);
  return frame.to_cartesian(eta, branch);
}

std::vector<double> optimal_weights(std::span<const Point2> points, const ConicVector& g,
                                    const EllipticalFrame& frame) {
  if (points.empty()) fail_input("no data");
  std::vector<double> grad_sq(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    Point2 on_curve = points[i];
    try {
      on_curve = nearest_point(frame, points[i]);
    } catch (const FitError&) {
      // Only a point at the exact centre lands here; keep the measured point.
    }
    grad_sq[i] = conic_gradient(g, on_curve).squaredNorm();
  }
  return weights_from_gradients(std::move(grad_sq));
}

std::vector<double> sampson_weights(std::span<const Point2> points, const ConicVector& g) {
  if (points.empty()) fail_input("no data");
  std::vector<double> grad_sq(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    grad_sq[i] = conic_gradient(g, points[i]).squaredNorm();
  return weights_from_gradients(std::move(grad_sq));
}

}  // namespace conicfit
