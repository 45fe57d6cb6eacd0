#pragma once

#include "conicfit/fit_pipeline.hpp"

namespace conicfit {

/// Nearest parabola to a generic fit in the posterior (Mahalanobis) metric,
/// with the rank-4 covariance of the constrained estimate.
struct ParabolicFit {
  ConicVector g_bar = ConicVector::Zero();      // curvature-corrected
  ConicVector g_bar_raw = ConicVector::Zero();  // in the raw posterior space
  int iterations = 0;
  double residual = 0;  // |G^T Q G| of g_bar_raw
  SymMatrix6 v_bar = SymMatrix6::Zero();
  SymMatrix6 s_bar = SymMatrix6::Zero();  // projected scatter (rank 4)
  int rank = 4;
};

inline constexpr int kParabolaMaxIterations = 50;

ParabolicFit project_to_parabola(const GenericFit& fit);

/// Mean of a unit Gaussian truncated to [x0, inf):
/// sqrt(2/pi) exp(-x0^2/2) / erfc(x0/sqrt2), evaluated without overflow.
double truncated_mean_factor(double x0);

/// Posterior mean of a fit restricted to one side of the parabolic boundary.
/// The full distribution is kept as (g0, v0, g_bar).
struct TruncatedPosterior {
  ConicVector g0 = ConicVector::Zero();
  SymMatrix6 v0 = SymMatrix6::Zero();
  ConicVector g_bar = ConicVector::Zero();
  double x0 = 0;                                       // signed standardised offset
  ConicVector mean = ConicVector::Zero();              // normalised to G^T C G = 1
  ConicVector mean_unnormalized = ConicVector::Zero();  // on the pencil through g0, g_bar
  ConicClass target = ConicClass::Ellipse;
  bool boundary_case = false;  // x0 == 0: generic fit was itself parabolic
};

TruncatedPosterior type_constrained_mean(const GenericFit& fit, const ParabolicFit& pf,
                                         ConicClass target);

}  // namespace conicfit
