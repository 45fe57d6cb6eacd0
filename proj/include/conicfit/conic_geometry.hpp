#pragma once

#include "conicfit/model_core.hpp"

#include <Eigen/Core>

#include <complex>
#include <span>
#include <string_view>
#include <vector>

namespace conicfit {

inline constexpr int kConicDim = 6;
inline constexpr int kConicRank = 5;

template <typename Scalar>
using Point2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using ConicVectorT = Eigen::Matrix<Scalar, kConicDim, 1>;

using Point2 = Point2T<double>;
/// Coefficients of x^2, xy, y^2, x, y, 1.
using ConicVector = ConicVectorT<double>;
using SymMatrix6 = SymMatrix<double, kConicDim>;
using DesignGradient = Eigen::Matrix<double, kConicDim, 2>;
using ConicEigenSolution = EigenSolution<double, kConicDim, kConicRank>;

template <typename Scalar>
ConicVectorT<Scalar> design_vector(const Point2T<Scalar>& p) {
  const Scalar x = p.x(), y = p.y();
  ConicVectorT<Scalar> d;
  d << x * x, x * y, y * y, x, y, Scalar(1);
  return d;
}

/// Columns are dD/dx and dD/dy.
template <typename Scalar>
Eigen::Matrix<Scalar, kConicDim, 2> design_gradient(const Point2T<Scalar>& p) {
  const Scalar x = p.x(), y = p.y();
  Eigen::Matrix<Scalar, kConicDim, 2> g;
  g.col(0) << Scalar(2) * x, y, Scalar(0), Scalar(1), Scalar(0), Scalar(0);
  g.col(1) << Scalar(0), x, Scalar(2) * y, Scalar(0), Scalar(1), Scalar(0);
  return g;
}

template <typename Scalar>
Scalar conic_value(const ConicVectorT<Scalar>& g, const Point2T<Scalar>& p) {
  return g.dot(design_vector(p));
}

template <typename Scalar>
Point2T<Scalar> conic_gradient(const ConicVectorT<Scalar>& g, const Point2T<Scalar>& p) {
  return design_gradient(p).transpose() * g;
}

/// L with Laplacian(D) = 2 L D; its only nonzero entries are L(0,5) = L(2,5) = 1.
template <typename Scalar = double>
SymMatrix<Scalar, kConicDim> curvature_matrix() {
  SymMatrix<Scalar, kConicDim> l = SymMatrix<Scalar, kConicDim>::Zero();
  l(0, 5) = Scalar(1);
  l(2, 5) = Scalar(1);
  return l;
}

/// (I + sigma^2 L^T): maps a raw eigenvector onto the curvature-corrected one.
template <typename Scalar = double>
SymMatrix<Scalar, kConicDim> curvature_transform(Scalar sigma2) {
  return SymMatrix<Scalar, kConicDim>::Identity() +
         sigma2 * curvature_matrix<Scalar>().transpose();
}

/// Q with G^T Q G = 4 g1 g3 - g2^2.
template <typename Scalar = double>
SymMatrix<Scalar, kConicDim> parabolic_quadric() {
  SymMatrix<Scalar, kConicDim> q = SymMatrix<Scalar, kConicDim>::Zero();
  q(0, 2) = q(2, 0) = Scalar(2);
  q(1, 1) = Scalar(-1);
  return q;
}

template <typename Scalar>
Scalar conic_discriminant(const ConicVectorT<Scalar>& g) {
  return Scalar(4) * g(0) * g(2) - g(1) * g(1);
}

/// g6 += sigma^2 (g1 + g3); leaves G^T C_N G unchanged.
ConicVector curvature_correct(const ConicVector& g, double sigma2);

/// C_N = sum_i w_i (D_x D_x^T + D_y D_y^T), gradients at the given points.
SymMatrix6 build_constraint_cn(std::span<const Point2> points, std::span<const double> weights);

std::vector<ConicVector> design_vectors(std::span<const Point2> points);

SymMatrix6 build_conic_scatter(std::span<const Point2> points, std::span<const double> weights);

enum class ConicClass { Ellipse, Hyperbola, Parabola, Degenerate };

std::string_view to_string(ConicClass c);

inline constexpr double kClassifyTolerance = 1e-10;

/// Sign of 4 g1 g3 - g2^2 with a dead band of width `tol`; Degenerate when the
/// 3x3 homogeneous conic matrix is singular relative to its scale.
ConicClass classify(const ConicVector& g, double tol = kClassifyTolerance);

/// Confocal elliptical coordinates (eta, theta) of a fitted ellipse or
/// hyperbola:  x = cos(theta) cosh(eta) f + sin(theta) sinh(eta) f_perp + c.
/// The curve is eta = eta0 (ellipse) or |theta| = theta0, pi - theta0 (hyperbola).
struct EllipticalFrame {
  Point2 center = Point2::Zero();
  Point2 focal = Point2::Zero();  // f_parallel; foci at center +- focal
  double coordinate = 0;          // eta0 or theta0
  ConicClass conic_class = ConicClass::Ellipse;
  bool circular = false;  // radial projection fallback
  double radius = 0;      // only meaningful when circular

  Point2 focal_perp() const { return {-focal.y(), focal.x()}; }
  Point2 to_cartesian(double eta, double theta) const;
  /// (eta, theta) with eta >= 0 and theta in [-pi, pi].
  std::pair<double, double> to_elliptical(const Point2& p) const;
  /// A point on the curve for curve parameter t (theta for an ellipse, eta for
  /// the branch theta = theta0 of a hyperbola).
  Point2 curve_point(double t) const;
};

EllipticalFrame elliptical_frame(const ConicVector& g);

/// On-curve estimate of the true point behind a measured point: keeps the
/// measured point's coordinate along the curve and replaces the other one.
Point2 nearest_point(const EllipticalFrame& frame, const Point2& p);

/// w_i = 1 / (N |grad Z(x_bar_i)|^2) with x_bar_i the projected point.
std::vector<double> optimal_weights(std::span<const Point2> points, const ConicVector& g,
                                    const EllipticalFrame& frame);

/// As optimal_weights but with the gradient at the measured point.
std::vector<double> sampson_weights(std::span<const Point2> points, const ConicVector& g);

}  // namespace conicfit
