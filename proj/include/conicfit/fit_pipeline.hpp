#pragma once

#include "conicfit/conic_geometry.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace conicfit {

enum class Weighting { Unweighted, Optimal, Sampson };

std::string_view to_string(Weighting w);

/// Generic (type-unconstrained) fit with its Gaussian posterior.
///
/// `g0` is the curvature-corrected estimate and `v0` its covariance, obtained
/// from the raw covariance by the linear map T = I + sigma^2 L^T. The raw
/// quantities (`g0_raw`, `y0`, `scatter`, `constraint`) are what the posterior
/// exp(-N G^T S G / 2 sigma^2) restricted to G^T C G = 1 is written in.
struct GenericFit {
  ConicVector g0 = ConicVector::Zero();
  ConicVector g0_raw = ConicVector::Zero();
  Eigen::Matrix<double, kConicRank, 1> lambdas = Eigen::Matrix<double, kConicRank, 1>::Zero();
  Eigen::Matrix<double, kConicDim, kConicRank> eigvecs;      // corrected
  Eigen::Matrix<double, kConicDim, kConicRank> eigvecs_raw;  // exact eigenvectors of (S, C)
  double sigma2_hat = 0;
  SymMatrix6 v0 = SymMatrix6::Zero();
  SymMatrix6 y0 = SymMatrix6::Zero();
  SymMatrix6 scatter = SymMatrix6::Zero();
  SymMatrix6 constraint = SymMatrix6::Zero();
  std::vector<double> weights;
  Weighting weighting = Weighting::Unweighted;
  bool curvature_corrected = true;
  std::size_t n_points = 0;

  /// I + sigma^2 L^T when corrected, identity otherwise.
  SymMatrix6 correction() const;
};

/// Generic fit of `points`. Unweighted ignores `weights`; Optimal and Sampson
/// require one weight per point. Optimal uses V0 = sigma^2 Y0 / N, the other
/// modes the explicit sandwich covariance.
GenericFit generic_fit(std::span<const Point2> points, Weighting weighting = Weighting::Unweighted,
                       std::span<const double> weights = {}, bool curvature_correction = true);

struct ReweightedFit {
  GenericFit preliminary;
  GenericFit final;
  bool fallback = false;  // preliminary had no projection frame
  std::vector<std::string> warnings;
};

/// Unweighted preliminary fit, one reweighting from it, and the weighted fit.
/// `reweighting` is Optimal (gradients on the preliminary curve) or Sampson
/// (gradients at the measured points).
ReweightedFit fit_with_reweight(std::span<const Point2> points,
                                Weighting reweighting = Weighting::Optimal,
                                bool curvature_correction = true);

/// Covariance predicted for noise `sigma` around exact on-curve points: the
/// fit of the exact points with its sigma^2 replaced by the given value.
SymMatrix6 predicted_covariance(std::span<const Point2> exact_points, double sigma,
                                Weighting weighting, ConicVector* fitted = nullptr);

struct BandField {
  ConicVector g;
  SymMatrix6 v;
};

/// Signed standardised algebraic distance G^T D(p) / sqrt(D(p)^T V D(p)).
double band_value(const BandField& field, const Point2& p);

/// Half-width of the 1-sigma band measured along the curve normal at p.
double band_half_width(const BandField& field, const Point2& p);

}  // namespace conicfit
