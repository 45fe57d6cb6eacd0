#include "conicfit/param_propagation.hpp"

#include <Eigen/LU>

#include <cmath>

namespace conicfit {

namespace {

Eigen::VectorXd checked(const DerivedParam& param, const ConicVector& g) {
  Eigen::VectorXd v = param.evaluate(g);
  if (!v.allFinite()) fail_numerical("parameter singular here");
  return v;
}

}  // namespace

ConicVector fd_steps(const ConicVector& g) {
  const double floor = g.norm() / 10;
  ConicVector h;
  for (int m = 0; m < kConicDim; ++m) h(m) = 1e-5 * std::max(std::abs(g(m)), floor);
  if (!(h.minCoeff() > 0)) fail_input("zero conic vector");
  return h;
}

DerivedParam::Gradient fd_gradient(const DerivedParam& param, const ConicVector& g) {
  const ConicVector h = fd_steps(g);
  const Eigen::Index k = checked(param, g).size();
  DerivedParam::Gradient out(k, kConicDim);
  for (int m = 0; m < kConicDim; ++m) {
    ConicVector up = g, down = g;
    up(m) += h(m);
    down(m) -= h(m);
    out.col(m) = (checked(param, up) - checked(param, down)) / (up(m) - down(m));
  }
  return out;
}

DerivedParam::Hessian fd_hessian(const DerivedParam& param, const ConicVector& g) {
  const ConicVector h = fd_steps(g);
  const Eigen::VectorXd mid = checked(param, g);
  const Eigen::Index k = mid.size();
  DerivedParam::Hessian out(static_cast<std::size_t>(k), SymMatrix6::Zero());

  auto shifted = [&](int m, double sm, int n, double sn) {
    ConicVector x = g;
    x(m) += sm * h(m);
    x(n) += sn * h(n);
    return checked(param, x);
  };

  for (int m = 0; m < kConicDim; ++m) {
    for (int n = 0; n < kConicDim; ++n) {
      Eigen::VectorXd col;
      if (m == n) {
        ConicVector up = g, down = g;
        up(m) += h(m);
        down(m) -= h(m);
        col = (checked(param, up) - 2 * mid + checked(param, down)) / (h(m) * h(m));
      } else {
        col = (shifted(m, 1, n, 1) - shifted(m, 1, n, -1) - shifted(m, -1, n, 1) +
               shifted(m, -1, n, -1)) /
              (4 * h(m) * h(n));
      }
      for (Eigen::Index j = 0; j < k; ++j) out[static_cast<std::size_t>(j)](m, n) = col(j);
    }
  }
  return out;
}

Propagated propagate(const DerivedParam& param, const ConicVector& g, const SymMatrix6& v) {
  Propagated out;
  out.value = checked(param, g);
  const DerivedParam::Gradient grad = param.gradient ? param.gradient(g) : fd_gradient(param, g);
  const DerivedParam::Hessian hess = param.hessian ? param.hessian(g) : fd_hessian(param, g);
  if (!grad.allFinite()) fail_numerical("parameter singular here");

  const Eigen::Index k = out.value.size();
  out.bias.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const SymMatrix6& hj = hess[static_cast<std::size_t>(j)];
    if (!hj.allFinite()) fail_numerical("parameter singular here");
    out.bias(j) = 0.5 * (detail::symmetrized(hj).cwiseProduct(v)).sum();
  }
  out.covariance = detail::symmetrized((grad * v * grad.transpose()).eval());
  return out;
}

Point2 ellipse_center(const ConicVector& g) {
  const double disc = conic_discriminant(g);
  const double scale = g.head<3>().squaredNorm();
  if (!(std::abs(disc) > 1e-12 * scale)) fail_numerical("parameter singular here");
  return {(g(1) * g(4) - 2 * g(2) * g(3)) / disc, (g(1) * g(3) - 2 * g(0) * g(4)) / disc};
}

Eigen::Matrix<double, 2, kConicDim> ellipse_center_jacobian(const ConicVector& g) {
  const Point2 c = ellipse_center(g);
  Eigen::Matrix2d a;
  a << 2 * g(0), g(1), g(1), 2 * g(2);
  // A c + b = 0  =>  A dc = -(dA c + db).
  Eigen::Matrix<double, 2, kConicDim> rhs = Eigen::Matrix<double, 2, kConicDim>::Zero();
  rhs.col(0) << 2 * c.x(), 0;
  rhs.col(1) << c.y(), c.x();
  rhs.col(2) << 0, 2 * c.y();
  rhs.col(3) << 1, 0;
  rhs.col(4) << 0, 1;
  return -a.partialPivLu().solve(rhs);
}

DerivedParam center_param() {
  DerivedParam p;
  p.evaluate = [](const ConicVector& g) -> Eigen::VectorXd { return ellipse_center(g); };
  return p;
}

CenterEstimate center_with_errors(const ConicVector& g, const SymMatrix6& v) {
  const DerivedParam param = center_param();
  const Propagated prop = propagate(param, g, v);

  CenterEstimate out;
  out.c = prop.value;
  out.bias = prop.bias;
  out.covariance = prop.covariance;

  const Eigen::Matrix<double, 2, kConicDim> analytic = ellipse_center_jacobian(g);
  const DerivedParam::Gradient numeric = fd_gradient(param, g);
  out.gradient_mismatch = (numeric - analytic).norm() / analytic.norm();
  if (!(out.gradient_mismatch < 1e-4)) fail_numerical("center derivatives disagree");
  return out;
}

CenterEstimate center_with_errors(const GenericFit& fit) {
  return center_with_errors(fit.g0, fit.v0);
}

}  // namespace conicfit
