#include "conicfit/synth_mc.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>

namespace conicfit {

Point2 Pose::rotate(const Point2& v) const {
  const double c = std::cos(rotation), s = std::sin(rotation);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

Point2 Pose::apply(const Point2& p) const { return rotate(p) + translation; }

CurveSpec CurveSpec::ellipse(double a, double b, double t_begin, double t_end) {
  CurveSpec spec;
  spec.shape = EllipseShape{a, b};
  spec.t_begin = t_begin;
  spec.t_end = t_end;
  return spec;
}

CurveSpec CurveSpec::parabola(double focal_length, double x_begin, double x_end) {
  CurveSpec spec;
  spec.shape = ParabolaShape{focal_length};
  spec.t_begin = x_begin;
  spec.t_end = x_end;
  return spec;
}

void CurveSpec::validate() const {
  if (const auto* e = std::get_if<EllipseShape>(&shape)) {
    if (!(e->b > 0) || !(e->a >= e->b) || !std::isfinite(e->a))
      fail_config("ellipse needs a >= b > 0");
  } else {
    const double f = std::get<ParabolaShape>(shape).focal_length;
    if (!(f > 0) || !std::isfinite(f)) fail_config("parabola needs focal_length > 0");
  }
  if (!std::isfinite(t_begin) || !std::isfinite(t_end) || !(t_end != t_begin))
    fail_config("curve arc is empty");
  if (!std::isfinite(pose.rotation) || !pose.translation.allFinite()) fail_config("invalid pose");
}

Point2 CurveSpec::point(double t) const {
  Point2 local;
  if (const auto* e = std::get_if<EllipseShape>(&shape)) {
    local = {e->a * std::cos(t), e->b * std::sin(t)};
  } else {
    const double f = std::get<ParabolaShape>(shape).focal_length;
    local = {t, t * t / (4 * f)};
  }
  return pose.apply(local);
}

Point2 CurveSpec::outward_normal(double t) const {
  Point2 local;
  if (const auto* e = std::get_if<EllipseShape>(&shape)) {
    local = {e->b * std::cos(t), e->a * std::sin(t)};
  } else {
    const double f = std::get<ParabolaShape>(shape).focal_length;
    local = {t / (2 * f), -1};
  }
  return pose.rotate(local.normalized());
}

ConicVector CurveSpec::true_conic() const {
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  if (const auto* e = std::get_if<EllipseShape>(&shape)) {
    a(0, 0) = 1 / (e->a * e->a);
    a(1, 1) = 1 / (e->b * e->b);
    a(2, 2) = -1;
  } else {
    const double f = std::get<ParabolaShape>(shape).focal_length;
    a(0, 0) = 1;
    a(1, 2) = a(2, 1) = -2 * f;
  }
  Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
  const double c = std::cos(pose.rotation), s = std::sin(pose.rotation);
  h.topLeftCorner<2, 2>() << c, -s, s, c;
  h.topRightCorner<2, 1>() = pose.translation;
  const Eigen::Matrix3d hinv = h.inverse();
  const Eigen::Matrix3d w = hinv.transpose() * a * hinv;
  ConicVector g;
  g << w(0, 0), w(0, 1) + w(1, 0), w(1, 1), w(0, 2) + w(2, 0), w(1, 2) + w(2, 1), w(2, 2);
  return canonical_sign((g / g.norm()).eval());
}

namespace {

double speed(const CurveSpec& spec, double t) {
  if (const auto* e = std::get_if<EllipseShape>(&spec.shape))
    return std::hypot(e->a * std::sin(t), e->b * std::cos(t));
  const double f = std::get<ParabolaShape>(spec.shape).focal_length;
  return std::hypot(1.0, t / (2 * f));
}

std::vector<double> arc_length_parameters(const CurveSpec& spec, int n_points) {
  constexpr int kSegments = 8192;
  const double span = spec.t_end - spec.t_begin;
  std::vector<double> cumulative(kSegments + 1, 0.0);
  for (int k = 0; k < kSegments; ++k) {
    const double t0 = spec.t_begin + span * k / kSegments;
    const double t1 = spec.t_begin + span * (k + 1) / kSegments;
    const double simpson =
        (t1 - t0) / 6 * (speed(spec, t0) + 4 * speed(spec, (t0 + t1) / 2) + speed(spec, t1));
    cumulative[k + 1] = cumulative[k] + std::abs(simpson);
  }
  const double total = cumulative.back();
  std::vector<double> ts(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    if (i == 0) { ts[0] = spec.t_begin; continue; }
    if (i == n_points - 1) { ts[i] = spec.t_end; continue; }
    const double target = total * i / (n_points - 1);
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), target);
    const int k = std::max<int>(1, static_cast<int>(it - cumulative.begin()));
    const double frac = (target - cumulative[k - 1]) / (cumulative[k] - cumulative[k - 1]);
    ts[i] = spec.t_begin + span * (k - 1 + frac) / kSegments;
  }
  return ts;
}

}  // namespace

std::vector<double> sample_parameters(const CurveSpec& spec, int n_points) {
  spec.validate();
  if (n_points < 2) fail_config("need at least 2 sample points");
  if (spec.spacing == Spacing::ArcLength) return arc_length_parameters(spec, n_points);
  std::vector<double> ts(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i)
    ts[i] = i == n_points - 1 ? spec.t_end
                              : spec.t_begin + (spec.t_end - spec.t_begin) * i / (n_points - 1);
  return ts;
}

std::vector<Point2> sample_curve(const CurveSpec& spec, int n_points) {
  std::vector<Point2> out;
  for (double t : sample_parameters(spec, n_points)) out.push_back(spec.point(t));
  return out;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t trial, std::uint64_t point,
                       std::uint64_t coord) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ trial);
  h = splitmix(h ^ point);
  h = splitmix(h ^ coord);
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

double normal_quantile(double u) {
  if (!(u > 0 && u < 1)) fail_input("quantile argument outside (0, 1)");
  // Rational approximation (relative error ~1e-9), then one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double lo = 0.02425;
  double x;
  if (u < lo) {
    const double q = std::sqrt(-2 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (u <= 1 - lo) {
    const double q = u - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
  const double step = e * std::sqrt(2 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - step / (1 + 0.5 * x * step);
}

double counter_normal(std::uint64_t seed, std::uint64_t trial, std::uint64_t point,
                      std::uint64_t coord) {
  return normal_quantile(counter_uniform(seed, trial, point, coord));
}

std::vector<Point2> add_noise(std::span<const Point2> points, const NoiseSpec& noise,
                              std::uint64_t trial) {
  if (!(noise.sigma >= 0) || !std::isfinite(noise.sigma)) fail_config("noise sigma must be >= 0");
  std::vector<Point2> out(points.begin(), points.end());
  if (noise.sigma == 0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].x() += noise.sigma * counter_normal(noise.seed, trial, i, 0);
    out[i].y() += noise.sigma * counter_normal(noise.seed, trial, i, 1);
  }
  return out;
}

std::string_view to_string(Reweight r) {
  switch (r) {
    case Reweight::None: return "none";
    case Reweight::Optimal: return "optimal";
    case Reweight::Sampson: return "sampson";
  }
  return "unknown";
}

TrialRecord run_pipeline(std::span<const Point2> points, const PipelineOptions& options) {
  TrialRecord rec;
  if (options.keep_points) rec.points.assign(points.begin(), points.end());
  try {
    if (options.reweight == Reweight::None) {
      rec.fit = generic_fit(points, Weighting::Unweighted, {}, options.curvature_correction);
    } else {
      const Weighting mode =
          options.reweight == Reweight::Sampson ? Weighting::Sampson : Weighting::Optimal;
      ReweightedFit rw = fit_with_reweight(points, mode, options.curvature_correction);
      rec.preliminary = std::move(rw.preliminary);
      rec.fit = std::move(rw.final);
      rec.reweight_fallback = rw.fallback;
    }
    rec.conic_class = classify(rec.fit.g0);
    if (options.type_target) {
      rec.parabolic = project_to_parabola(rec.fit);
      if (*options.type_target != ConicClass::Parabola)
        rec.truncated = type_constrained_mean(rec.fit, *rec.parabolic, *options.type_target);
    }
    rec.ok = true;
    if (options.center) {
      // A centre that cannot be propagated does not void the fit itself.
      try {
        rec.center = center_with_errors(rec.fit);
      } catch (const FitError& e) {
        rec.center_error = e.what();
      }
    }
  } catch (const FitError& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

int resolve_threads(int requested) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("CONIC_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || v < 0) fail_config("CONIC_THREADS must be a non-negative integer");
      n = static_cast<int>(v);
    }
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(n, 1);
}

TrialEnsemble run_ensemble(const EnsembleRequest& request) {
  if (request.n_trials < 1) fail_config("n_trials must be >= 1");
  const std::vector<Point2> base = sample_curve(request.curve, request.n_points);

  TrialEnsemble ens;
  ens.trials.resize(static_cast<std::size_t>(request.n_trials));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ens.trials.size(); i = next++) {
      const auto noisy = add_noise(base, request.noise, i);
      ens.trials[i] = run_pipeline(noisy, request.options);
    }
  };
  const int threads = std::min(resolve_threads(request.threads), request.n_trials);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  EnsembleSummary& sum = ens.summary;
  sum.trials = ens.trials.size();
  for (const Point2& p : request.test_points) sum.coverage.push_back(Coverage{p});
  for (const TrialRecord& rec : ens.trials) {
    if (!rec.ok) {
      ++sum.failed;
      continue;
    }
    sum.g0.add(rec.fit.g0);
    sum.sigma2.add(Eigen::Matrix<double, 1, 1>(rec.fit.sigma2_hat));
    ++sum.class_counts[static_cast<int>(rec.conic_class)];
    if (!rec.center_error.empty()) ++sum.center_failed;
    // Centres of non-elliptical fits lie far off and would swamp the moments.
    if (rec.center && rec.conic_class == ConicClass::Ellipse) {
      sum.center.add(rec.center->c);
      sum.center_corrected.add(rec.center->corrected());
    }
    const BandField field{rec.fit.g0, rec.fit.v0};
    for (Coverage& cov : sum.coverage) {
      double z;
      try {
        z = std::abs(band_value(field, cov.point));
      } catch (const FitError&) {
        continue;
      }
      ++cov.evaluated;
      for (int k = 0; k < 3; ++k)
        if (z > k + 1) ++cov.beyond[k];
    }
  }
  return ens;
}

}  // namespace conicfit
