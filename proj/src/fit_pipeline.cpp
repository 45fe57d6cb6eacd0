#include "conicfit/fit_pipeline.hpp"

#include <cmath>

namespace conicfit {

std::string_view to_string(Weighting w) {
  switch (w) {
    case Weighting::Unweighted: return "unweighted";
    case Weighting::Optimal: return "optimal";
    case Weighting::Sampson: return "sampson";
  }
  return "unknown";
}

SymMatrix6 GenericFit::correction() const {
  return curvature_corrected ? curvature_transform(sigma2_hat) : SymMatrix6::Identity();
}

namespace {

void require_full_rank_constraint(const SymMatrix6& cn) {
  const Eigen::Matrix<double, kConicRank, kConicRank> block = cn.topLeftCorner<kConicRank, kConicRank>();
  const auto spec = jacobi_eigen<double, kConicRank>(block);
  if (!(spec.values(0) > 1e-12 * block.trace())) fail_numerical("degenerate point configuration");
}

}  // namespace

GenericFit generic_fit(std::span<const Point2> points, Weighting weighting,
                       std::span<const double> weights, bool curvature_correction) {
  const std::size_t n = points.size();
  if (n < static_cast<std::size_t>(kConicDim)) fail_input("underdetermined");

  std::vector<double> w;
  if (weighting == Weighting::Unweighted) {
    w.assign(n, 1.0);
  } else {
    if (weights.size() != n) fail_input("one weight per point required");
    w.assign(weights.begin(), weights.end());
  }

  GenericFit fit;
  fit.weighting = weighting;
  fit.curvature_corrected = curvature_correction;
  fit.n_points = n;
  fit.scatter = build_conic_scatter(points, w);
  fit.constraint = build_constraint_cn(points, w);
  require_full_rank_constraint(fit.constraint);

  const auto sol = solve_generalized<kConicRank>(fit.scatter, fit.constraint);
  fit.lambdas = sol.lambdas;
  fit.eigvecs_raw = sol.vectors;
  fit.g0_raw = sol.vector(0);
  fit.sigma2_hat = estimate_sigma2(sol);
  fit.y0 = generalized_inverse_y0(sol);

  const SymMatrix6 t = fit.correction();
  fit.eigvecs = t * fit.eigvecs_raw;
  fit.g0 = fit.eigvecs.col(0);

  SymMatrix6 v_raw;
  if (weighting == Weighting::Optimal) {
    v_raw = covariance_optimal<double, kConicDim>(fit.y0, fit.sigma2_hat, n);
  } else {
    const auto designs = design_vectors(points);
    std::vector<DesignGradient> grads;
    grads.reserve(n);
    for (const auto& p : points) grads.push_back(design_gradient(p));
    v_raw = covariance_explicit<double, kConicDim, 2>(fit.y0, fit.sigma2_hat, designs, grads, w,
                                                       fit.g0_raw);
  }
  fit.v0 = detail::symmetrized((t * v_raw * t.transpose()).eval());
  fit.weights = std::move(w);
  return fit;
}

ReweightedFit fit_with_reweight(std::span<const Point2> points, Weighting reweighting,
                                bool curvature_correction) {
  if (reweighting == Weighting::Unweighted) fail_config("reweighting mode must be optimal or sampson");
  ReweightedFit out;
  out.preliminary = generic_fit(points, Weighting::Unweighted, {}, curvature_correction);

  std::vector<double> weights;
  if (reweighting == Weighting::Sampson) {
    weights = sampson_weights(points, out.preliminary.g0);
  } else {
    try {
      const EllipticalFrame frame = elliptical_frame(out.preliminary.g0);
      weights = optimal_weights(points, out.preliminary.g0, frame);
    } catch (const FitError& e) {
      out.fallback = true;
      out.warnings.push_back(std::string("reweighting skipped: ") + e.what());
      out.final = out.preliminary;
      return out;
    }
  }
  out.final = generic_fit(points, reweighting, weights, curvature_correction);
  return out;
}

SymMatrix6 predicted_covariance(std::span<const Point2> exact_points, double sigma,
                                Weighting weighting, ConicVector* fitted) {
  GenericFit fit = generic_fit(exact_points, Weighting::Unweighted, {}, false);
  if (weighting != Weighting::Unweighted) {
    // On-curve points are their own projections, so the optimal weights are
    // the gradient weights at the points; no elliptical frame is needed and
    // parabolas work too.
    const auto w = sampson_weights(exact_points, fit.g0);
    fit = generic_fit(exact_points, weighting, w, false);
  }
  if (fitted) *fitted = fit.g0_raw;
  const double s2 = sigma * sigma;
  if (fit.sigma2_hat > 0) return fit.v0 * (s2 / fit.sigma2_hat);
  // Exact data: sigma2_hat is zero, so rebuild V0 from Y0 directly.
  if (weighting == Weighting::Optimal)
    return covariance_optimal<double, kConicDim>(fit.y0, s2, fit.n_points);
  const auto designs = design_vectors(exact_points);
  std::vector<DesignGradient> grads;
  for (const auto& p : exact_points) grads.push_back(design_gradient(p));
  return covariance_explicit<double, kConicDim, 2>(fit.y0, s2, designs, grads, fit.weights,
                                                   fit.g0_raw);
}

double band_value(const BandField& field, const Point2& p) {
  const ConicVector d = design_vector(p);
  const double var = d.dot(field.v * d);
  if (!(var > 0)) fail_numerical("degenerate variance direction");
  return field.g.dot(d) / std::sqrt(var);
}

double band_half_width(const BandField& field, const Point2& p) {
  const ConicVector d = design_vector(p);
  const double var = d.dot(field.v * d);
  if (!(var > 0)) fail_numerical("degenerate variance direction");
  const double grad = conic_gradient(field.g, p).norm();
  if (!(grad > 0)) fail_numerical("vanishing gradient");
  return std::sqrt(var) / grad;
}

}  // namespace conicfit
