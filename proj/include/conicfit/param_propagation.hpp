#pragma once

#include "conicfit/fit_pipeline.hpp"

#include <functional>
#include <vector>

namespace conicfit {

/// A k-vector function of the conic coefficients. Derivatives that are left
/// empty are taken by central differences.
struct DerivedParam {
  using Value = Eigen::VectorXd;
  using Gradient = Eigen::Matrix<double, Eigen::Dynamic, kConicDim>;  // k x 6
  using Hessian = std::vector<SymMatrix6>;                             // k of 6 x 6

  std::function<Value(const ConicVector&)> evaluate;
  std::function<Gradient(const ConicVector&)> gradient;
  std::function<Hessian(const ConicVector&)> hessian;
};

/// h_m = 1e-5 max(|g_m|, |g| / 10).
ConicVector fd_steps(const ConicVector& g);

DerivedParam::Gradient fd_gradient(const DerivedParam& param, const ConicVector& g);

/// Every entry computed independently (not mirrored), so asymmetry measures
/// the differencing error.
DerivedParam::Hessian fd_hessian(const DerivedParam& param, const ConicVector& g);

struct Propagated {
  Eigen::VectorXd value;
  Eigen::VectorXd bias;         // E[r(G_hat)] - r(G), to leading order
  Eigen::MatrixXd covariance;
};

/// bias_j = 1/2 tr(R''_j V), cov = r' V r'^T.
Propagated propagate(const DerivedParam& param, const ConicVector& g, const SymMatrix6& v);

/// Stationary point of G^T D(x).
Point2 ellipse_center(const ConicVector& g);

/// d c / d g (2 x 6), differentiated through the 2 x 2 solve.
Eigen::Matrix<double, 2, kConicDim> ellipse_center_jacobian(const ConicVector& g);

DerivedParam center_param();

struct CenterEstimate {
  Point2 c = Point2::Zero();
  Point2 bias = Point2::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  double gradient_mismatch = 0;  // relative gap between the FD and analytic gradients

  Point2 corrected() const { return c - bias; }
};

CenterEstimate center_with_errors(const GenericFit& fit);
CenterEstimate center_with_errors(const ConicVector& g, const SymMatrix6& v);

}  // namespace conicfit
