#include "app/acceptance.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

namespace conicfit::acceptance {

namespace {

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

CriterionResult named(int id, const char* name) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  return r;
}

double angle_between(const ConicVector& a, const ConicVector& b) {
  const ConicVector ua = a.normalized();
  ConicVector ub = b.normalized();
  if (ua.dot(ub) < 0) ub = -ub;
  return 2 * std::asin(std::min(1.0, (ua - ub).norm() / 2));
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2) return *mid;
  return (*mid + *std::max_element(v.begin(), mid)) / 2;
}

// Regimes shared by several criteria.
constexpr double kTip = 0.0;
CurveSpec narrow_quadrant() { return CurveSpec::ellipse(1.0, 0.1, 0.0, std::numbers::pi / 2); }

EnsembleRequest fig2_request(int trials, std::uint64_t seed, const SuiteOptions& o) {
  EnsembleRequest r;
  r.curve = narrow_quadrant();
  r.noise = NoiseSpec{0.001, seed};
  r.n_points = 20;
  r.n_trials = trials;
  r.options.curvature_correction = o.curvature_correction;
  r.threads = o.threads;
  return r;
}

EnsembleRequest fig4_request(int trials, std::uint64_t seed, const SuiteOptions& o) {
  EnsembleRequest r = fig2_request(trials, seed, o);
  r.noise.sigma = 0.004;
  r.n_points = 500;
  return r;
}

std::size_t failed_trials(const TrialEnsemble& ens) { return ens.summary.failed; }

// Mean and standard error of signed normal offsets at one curve parameter.
struct OffsetStats {
  double mean = 0, se = 0;
  std::size_t missed = 0;
};

OffsetStats offsets_at(const TrialEnsemble& ens, const CurveSpec& curve, double t) {
  const Point2 p = curve.point(t);
  const Point2 n = curve.outward_normal(t);
  RunningMoments<1> m;
  OffsetStats out;
  for (const TrialRecord& rec : ens.trials) {
    if (!rec.ok) continue;
    try {
      m.add(Eigen::Matrix<double, 1, 1>(signed_normal_offset(rec.fit.g0, p, n)));
    } catch (const FitError&) {
      ++out.missed;
    }
  }
  out.mean = m.mean(0);
  out.se = m.standard_error()(0);
  return out;
}

// --- random exact conics ----------------------------------------------------

struct ExactConic {
  ConicVector g;
  std::vector<Point2> points;
};

ExactConic random_exact_conic(std::uint64_t seed, std::uint64_t rep) {
  std::uint64_t k = 0;
  auto u = [&] { return counter_uniform(seed, rep, k++, 0); };
  const int kind = static_cast<int>(rep % 3);
  const double a = 0.5 + 2 * u();
  const double b = 0.2 + 0.8 * a * u();
  const double angle = 2 * std::numbers::pi * u();
  const Point2 shift(4 * u() - 2, 4 * u() - 2);
  const int n = 6 + static_cast<int>(7 * u());
  const double start = 2 * std::numbers::pi * u();

  Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
  h.topLeftCorner<2, 2>() << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  h.topRightCorner<2, 1>() = shift;

  Eigen::Matrix3d local = Eigen::Matrix3d::Zero();
  ExactConic out;
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    Point2 p;
    if (kind == 0) {
      const double t = start + 1.5 * std::numbers::pi * s;
      p = {a * std::cos(t), b * std::sin(t)};
    } else if (kind == 1) {
      const double tau = -1.5 + 3 * s;
      p = {(i % 3 == 0 ? -1.0 : 1.0) * a * std::cosh(tau), b * std::sinh(tau)};
    } else {
      const double x = -2 * a + 4 * a * s;
      p = {x, x * x / (4 * b)};
    }
    out.points.push_back((h * Eigen::Vector3d(p.x(), p.y(), 1)).head<2>());
  }
  if (kind == 0) {
    local.diagonal() << 1 / (a * a), 1 / (b * b), -1;
  } else if (kind == 1) {
    local.diagonal() << 1 / (a * a), -1 / (b * b), -1;
  } else {
    local(0, 0) = 1;
    local(1, 2) = local(2, 1) = -2 * b;
  }
  const Eigen::Matrix3d hi = h.inverse();
  const Eigen::Matrix3d w = hi.transpose() * local * hi;
  out.g << w(0, 0), 2 * w(0, 1), w(1, 1), 2 * w(0, 2), 2 * w(1, 2), w(2, 2);
  return out;
}

// --- criteria ------------------------------------------------------------------

CriterionResult exact_recovery(const SuiteOptions&) {
  CriterionResult r = named(1, "exact-data recovery");
  const auto start = std::chrono::steady_clock::now();
  double worst_ratio = 0, worst_angle = 0;
  int bad = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const ExactConic conic = random_exact_conic(0xC1, rep);
    try {
      const GenericFit fit = generic_fit(conic.points);
      const double ratio = std::abs(fit.lambdas(0)) / fit.lambdas(kConicRank - 1);
      const double ang = angle_between(fit.g0, conic.g);
      worst_ratio = std::max(worst_ratio, ratio);
      worst_angle = std::max(worst_angle, ang);
      if (!(ratio < 1e-10 && ang < 1e-8)) ++bad;
    } catch (const FitError&) {
      ++bad;
    }
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.pass = bad == 0 && r.seconds < 1.0;
  r.detail = fmt("100 conics, %d bad; max lambda0/lambda4 %.2e (< 1e-10), max angle %.2e (< 1e-8)",
                 bad, worst_ratio, worst_angle);
  return r;
}

CriterionResult covariance_calibration(const SuiteOptions& o) {
  CriterionResult r = named(2, "covariance calibration");
  const TrialEnsemble ens = run_ensemble(fig2_request(10000, 0xC2, o));
  SymMatrix6 predicted = SymMatrix6::Zero();
  std::size_t used = 0;
  for (const TrialRecord& rec : ens.trials)
    if (rec.ok) {
      predicted += rec.fit.v0;
      ++used;
    }
  predicted /= static_cast<double>(std::max<std::size_t>(used, 1));
  const SymMatrix6 empirical = ens.summary.g0.covariance();
  const double max_elem = predicted.cwiseAbs().maxCoeff();
  double worst = 0;
  int compared = 0;
  for (int i = 0; i < kConicDim; ++i)
    for (int j = i; j < kConicDim; ++j) {
      if (std::abs(predicted(i, j)) < 0.01 * max_elem) continue;
      ++compared;
      worst = std::max(worst, std::abs(empirical(i, j) - predicted(i, j)) / std::abs(predicted(i, j)));
    }
  r.pass = failed_trials(ens) == 0 && compared > 0 && worst <= 0.10;
  r.detail = fmt("10000 trials, %zu failed; %d elements compared, max relative gap %.4f (<= 0.10); "
                 "mean sigma2_hat / sigma^2 %.4f",
                 failed_trials(ens), compared, worst, ens.summary.sigma2.mean(0) / 1e-6);
  return r;
}

std::vector<double> fig2_test_parameters(int n) {
  std::vector<double> t;
  for (int k = 0; k < n; ++k) t.push_back(std::numbers::pi / 2 * k / (n - 1));
  return t;
}

CriterionResult band_coverage(const SuiteOptions& o) {
  CriterionResult r = named(3, "band coverage");
  EnsembleRequest req = fig2_request(2000, 0xC3, o);
  for (double t : fig2_test_parameters(50)) req.test_points.push_back(req.curve.point(t));
  const TrialEnsemble ens = run_ensemble(req);
  std::size_t evaluated = 0, beyond = 0;
  for (const Coverage& c : ens.summary.coverage) {
    evaluated += c.evaluated;
    beyond += c.beyond[1];
  }
  const double frac = evaluated ? static_cast<double>(beyond) / static_cast<double>(evaluated) : 0;
  r.pass = failed_trials(ens) == 0 && evaluated == 2000u * 50u && frac >= 0.031 && frac <= 0.061;
  r.detail = fmt("%zu of %zu standardised distances beyond 2: %.4f (in [0.031, 0.061]); %.2f per 50 points",
                 beyond, evaluated, frac, 50 * frac);
  return r;
}

CriterionResult reweighting_gain(const SuiteOptions&) {
  CriterionResult r = named(4, "reweighting gain");
  const auto pts = sample_curve(narrow_quadrant(), 20);
  const Point2 tip = narrow_quadrant().point(kTip);
  ConicVector gu, gw;
  const SymMatrix6 vu = predicted_covariance(pts, 0.001, Weighting::Unweighted, &gu);
  const SymMatrix6 vw = predicted_covariance(pts, 0.001, Weighting::Optimal, &gw);
  const double hu = band_half_width(BandField{gu, vu}, tip);
  const double hw = band_half_width(BandField{gw, vw}, tip);
  const double ratio = hu / hw;
  r.pass = ratio >= 1.4 && ratio <= 2.8;
  r.detail = fmt("tip half-width %.4e unweighted, %.4e weighted: ratio %.3f (in [1.4, 2.8])", hu, hw, ratio);
  return r;
}

CriterionResult curvature_bias(const SuiteOptions& o) {
  CriterionResult r = named(5, "curvature-bias removal");
  // The fast variant is a smoke test at half the noise, inside the regime
  // where the first-order correction is accurate.
  const int trials = o.fast ? 500 : 2000;
  const double sigma = o.fast ? 0.002 : 0.004;
  EnsembleRequest req = fig4_request(trials, 0xC5, o);
  req.noise.sigma = sigma;
  const TrialEnsemble with = run_ensemble(req);
  req.options.curvature_correction = false;
  const TrialEnsemble without = run_ensemble(req);
  const CurveSpec curve = narrow_quadrant();
  const OffsetStats a = offsets_at(with, curve, kTip);
  const OffsetStats b = offsets_at(without, curve, kTip);
  const double za = a.mean / a.se, zb = b.mean / b.se;
  r.pass = failed_trials(with) == 0 && failed_trials(without) == 0 && a.missed == 0 &&
           b.missed == 0 && zb > 3 && std::abs(za) <= 3;
  r.detail = fmt("%d trials, sigma %.3f; tip offset uncorrected %.3e (%.2f SE, need > +3), corrected %.3e (%.2f SE, need |z| <= 3)",
                 trials, sigma, b.mean, zb, a.mean, za);
  return r;
}

CriterionResult sampson_bias(const SuiteOptions& o) {
  CriterionResult r = named(6, "Sampson-bias demonstration");
  EnsembleRequest req = fig4_request(2000, 0xC6, o);
  req.options.reweight = Reweight::Sampson;
  const TrialEnsemble ens = run_ensemble(req);
  const CurveSpec curve = narrow_quadrant();
  // Longest run of consecutive test points whose mean offset is inside by 3 SE.
  int run = 0, longest = 0, inside = 0;
  double worst_z = 0;
  std::size_t missed = 0;
  const auto params = fig2_test_parameters(20);
  for (double t : params) {
    const OffsetStats s = offsets_at(ens, curve, t);
    missed += s.missed;
    const double z = s.mean / s.se;
    worst_z = std::min(worst_z, z);
    if (z < -3) {
      ++inside;
      longest = std::max(longest, ++run);
    } else {
      run = 0;
    }
  }
  r.pass = failed_trials(ens) == 0 && missed == 0 && longest >= 5;
  r.detail = fmt("2000 trials; %d of 20 test points inside by > 3 SE, longest band %d (>= 5); most negative %.2f SE",
                 inside, longest, worst_z);
  return r;
}

CriterionResult parabolic_projection(const SuiteOptions& o) {
  CriterionResult r = named(7, "parabolic projection");
  const int fits = o.fast ? 200 : 1000;
  const CurveSpec fig5 = CurveSpec::parabola(0.01, 0, 0.25);
  CurveSpec posed = CurveSpec::ellipse(2.0, 0.7, 0.3, 2.8);
  posed.pose.rotation = 0.9;
  posed.pose.translation = Point2(1.5, -0.5);
  const auto base2 = sample_curve(narrow_quadrant(), 20);
  const auto base5 = sample_curve(fig5, 20);
  const auto base_posed = sample_curve(posed, 25);

  int bad = 0, max_iter = 0, probe_failures = 0;
  double worst_q = 0;
  for (int k = 0; k < fits; ++k) {
    const std::uint64_t trial = static_cast<std::uint64_t>(k);
    std::vector<Point2> pts;
    switch (k % 3) {
      case 0: pts = add_noise(base2, NoiseSpec{0.002, 0xC7}, trial); break;
      case 1: pts = add_noise(base5, NoiseSpec{0.001, 0xC7}, trial); break;
      default: pts = add_noise(base_posed, NoiseSpec{0.02, 0xC7}, trial); break;
    }
    try {
      const GenericFit fit = fit_with_reweight(pts).final;
      const ParabolicFit pf = project_to_parabola(fit);
      const ConicVector& g = pf.g_bar_raw;
      const double q_rel = pf.residual / g.head<3>().squaredNorm();
      worst_q = std::max(worst_q, q_rel);
      max_iter = std::max(max_iter, pf.iterations);
      const ProbeResult probe = minimality_probe(fit, pf, 100, 0xC70000 + trial);
      probe_failures += probe.failures;
      if (!(q_rel < 1e-12) || pf.iterations > kParabolaMaxIterations || probe.failures) ++bad;
    } catch (const FitError&) {
      ++bad;
    }
  }
  r.pass = bad == 0;
  r.detail = fmt("%d fits, %d bad; max relative |G^T Q G| %.2e (< 1e-12), max iterations %d (<= 50), "
                 "%d probe failures in %d directions",
                 fits, bad, worst_q, max_iter, probe_failures, 100 * fits);
  return r;
}

CriterionResult truncated_mean_oracle(const SuiteOptions&) {
  CriterionResult r = named(8, "truncated-mean oracle");
  double worst = 0;
  for (double x0 : {-8.0, -2.0, 0.0, 1.0, 3.0, 6.0})
    worst = std::max(worst, std::abs(truncated_mean_factor(x0) - quadrature_truncated_mean(x0)));
  r.pass = worst < 1e-10;
  r.detail = fmt("max |factor - quadrature| over 6 points %.2e (< 1e-10)", worst);
  return r;
}

CriterionResult type_constrained_sanity(const SuiteOptions& o) {
  CriterionResult r = named(9, "type-constrained sanity");
  const int trials = o.fast ? 200 : 2000;
  EnsembleRequest req = fig2_request(trials, 0xC9, o);
  req.options.type_target = ConicClass::Ellipse;
  const TrialEnsemble weighted = run_ensemble(req);
  req.options.reweight = Reweight::None;
  const TrialEnsemble unweighted = run_ensemble(req);

  std::size_t not_ellipse = 0;
  auto shifts = [&](const TrialEnsemble& ens) {
    std::vector<double> out;
    for (const TrialRecord& rec : ens.trials) {
      if (!rec.ok || !rec.truncated) continue;
      if (classify(rec.truncated->mean) != ConicClass::Ellipse) ++not_ellipse;
      out.push_back(angle_between(rec.truncated->mean, rec.fit.g0));
    }
    return out;
  };
  const double mw = median(shifts(weighted));
  const double mu = median(shifts(unweighted));
  r.pass = failed_trials(weighted) == 0 && failed_trials(unweighted) == 0 && not_ellipse == 0 &&
           mw < 0.2 * mu;
  r.detail = fmt("%d trials x 2 regimes; %zu non-elliptical means; median shift from G0 weighted %.3e, "
                 "unweighted %.3e: ratio %.4f (< 0.2)",
                 trials, not_ellipse, mw, mu, mu > 0 ? mw / mu : 0.0);
  return r;
}

CriterionResult center_bias(const SuiteOptions& o) {
  CriterionResult r = named(10, "center bias");
  EnsembleRequest req = fig4_request(2000, 0xCA, o);
  req.options.center = true;
  const TrialEnsemble ens = run_ensemble(req);
  const auto& raw = ens.summary.center;
  const auto& corr = ens.summary.center_corrected;
  const Point2 truth = Point2::Zero();
  const Eigen::Vector2d z_raw = (raw.mean - truth).cwiseQuotient(raw.standard_error());
  const Eigen::Vector2d z_corr = (corr.mean - truth).cwiseQuotient(corr.standard_error());
  // Moments cover elliptical fits only (see EnsembleSummary).
  r.pass = failed_trials(ens) == 0 && raw.count > 0 && z_corr.cwiseAbs().maxCoeff() < 3 &&
           z_raw.cwiseAbs().maxCoeff() > 3;
  r.detail = fmt("2000 trials, %zu elliptical with centres, %zu centre failures; uncorrected offset (%.2f, %.2f) SE (need one > 3), corrected "
                 "(%.2f, %.2f) SE (need all < 3); SE x uncorrected %.3e, corrected %.3e",
                 raw.count, ens.summary.center_failed, z_raw(0), z_raw(1), z_corr(0), z_corr(1), raw.standard_error()(0),
                 corr.standard_error()(0));
  return r;
}

bool same_ensemble(const TrialEnsemble& a, const TrialEnsemble& b) {
  if (a.trials.size() != b.trials.size()) return false;
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    const TrialRecord &x = a.trials[i], &y = b.trials[i];
    if (x.ok != y.ok || x.fit.g0 != y.fit.g0 || x.fit.v0 != y.fit.v0) return false;
    if (x.center.has_value() != y.center.has_value()) return false;
    if (x.center && (x.center->c != y.center->c || x.center->bias != y.center->bias)) return false;
  }
  const EnsembleSummary &s = a.summary, &t = b.summary;
  return s.g0.mean == t.g0.mean && s.g0.m2 == t.g0.m2 && s.sigma2.mean == t.sigma2.mean &&
         s.center.mean == t.center.mean && s.center.m2 == t.center.m2;
}

CriterionResult determinism(const SuiteOptions& o) {
  CriterionResult r = named(11, "determinism");
  // Reports of the fast, cheap criteria reproduce byte for byte.
  SuiteOptions fast = o;
  fast.fast = true;
  std::vector<CriterionResult> first, second;
  for (int id : {1, 4, 8}) {
    first.push_back(run_criterion(id, fast));
    second.push_back(run_criterion(id, fast));
  }
  const bool reports_equal = format_report(first, false) == format_report(second, false);

  EnsembleRequest req = fig4_request(o.fast ? 40 : 200, 0xCB, o);
  req.options.center = true;
  req.threads = 1;
  const TrialEnsemble serial = run_ensemble(req);
  bool threads_equal = true;
  for (int threads : {2, 3, 8}) {
    req.threads = threads;
    threads_equal = threads_equal && same_ensemble(serial, run_ensemble(req));
  }
  r.pass = reports_equal && threads_equal;
  r.detail = fmt("repeated reports %s; ensembles at 1/2/3/8 threads %s", reports_equal ? "identical" : "DIFFER",
                 threads_equal ? "identical" : "DIFFER");
  return r;
}

// Adaptive Simpson on [a, b].
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
  const double m = (a + b) / 2, lm = (a + m) / 2, rm = (m + b) / 2;
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol)
    return left + right + (left + right - whole) / 15;
  const double half = std::max(tol / 2, 1e-17);
  return simpson(f, a, m, fa, flm, fm, left, half, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, half, depth - 1);
}

}  // namespace

ProbeResult minimality_probe(const GenericFit& fit, const ParabolicFit& pf, int directions,
                             std::uint64_t seed) {
  // The projection minimises (G - G0)^T S (G - G0) over the parabolic cone
  // intersected with the plane G0^T C G = 1; probe that problem.
  const SymMatrix6 q = parabolic_quadric();
  const SymMatrix6& s = fit.scatter;
  const ConicVector& g0 = fit.g0_raw;
  const ConicVector cg0 = fit.constraint * g0;
  const ConicVector gt = pf.g_bar_raw / cg0.dot(pf.g_bar_raw);
  auto objective = [&](const ConicVector& g) {
    const ConicVector d = g - g0;
    return d.dot(s * d);
  };
  const double f0 = objective(gt);

  Eigen::Matrix<double, kConicDim, 2> normals;
  normals.col(0) = cg0;
  normals.col(1) = q * gt;
  const Eigen::Matrix<double, kConicDim, kConicDim> basis =
      Eigen::HouseholderQR<Eigen::Matrix<double, kConicDim, 2>>(normals).householderQ();
  const Eigen::Matrix<double, kConicDim, 4> tangent = basis.rightCols<4>();
  // Return path onto the cone, kept inside the plane.
  const ConicVector qn = q * gt;
  const ConicVector back = qn - cg0 * (cg0.dot(qn) / cg0.squaredNorm());
  const double step = 1e-3 * std::max((gt - g0).norm(), 1e-6 * gt.norm());

  ProbeResult out;
  out.directions = directions;
  out.worst_relative_gain = std::numeric_limits<double>::infinity();
  for (int k = 0; k < directions; ++k) {
    Eigen::Matrix<double, 4, 1> z;
    for (int i = 0; i < 4; ++i)
      z(i) = counter_normal(seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i), 0);
    ConicVector g = gt + step * (tangent * z.normalized());
    // (g + t back)^T Q (g + t back) = 0, smallest root.
    const double a = back.dot(q * back), b = 2 * g.dot(q * back), c = g.dot(q * g);
    double t;
    if (std::abs(a) * std::abs(c) < 1e-300 + 1e-14 * b * b) {
      t = -c / b;
    } else {
      const double disc = b * b - 4 * a * c;
      if (disc < 0) {
        ++out.failures;
        continue;
      }
      const double qroot = -0.5 * (b + std::copysign(std::sqrt(disc), b));
      const double t1 = qroot / a, t2 = c / qroot;
      t = std::abs(t1) < std::abs(t2) ? t1 : t2;
    }
    g += t * back;
    const double gain = f0 > 0 ? (objective(g) - f0) / f0 : objective(g);
    out.worst_relative_gain = std::min(out.worst_relative_gain, gain);
    if (!(gain > 0)) ++out.failures;
  }
  return out;
}

double signed_normal_offset(const ConicVector& g, const Point2& p, const Point2& n) {
  const double a = g(0) * n.x() * n.x() + g(1) * n.x() * n.y() + g(2) * n.y() * n.y();
  const double b = conic_gradient(g, p).dot(n);
  const double c = conic_value(g, p);
  if (std::abs(a) * std::abs(c) <= 1e-14 * b * b) {
    if (b == 0) fail_numerical("normal line misses the curve");
    return -c / b;
  }
  const double disc = b * b - 4 * a * c;
  if (disc < 0) fail_numerical("normal line misses the curve");
  const double qroot = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  const double t1 = qroot / a, t2 = c / qroot;
  return std::abs(t1) < std::abs(t2) ? t1 : t2;
}

double quadrature_truncated_mean(double x0) {
  const double shift = x0 > 0 ? x0 * x0 / 2 : 0.0;
  const double lo = x0, hi = std::max(x0, 0.0) + 40;
  // Fixed panels first so a vanishing initial estimate cannot stop the recursion.
  auto integrate = [&](const std::function<double(double)>& f) {
    constexpr int kPanels = 64;
    double sum = 0;
    for (int k = 0; k < kPanels; ++k) {
      const double a = lo + (hi - lo) * k / kPanels, b = lo + (hi - lo) * (k + 1) / kPanels;
      const double fa = f(a), fb = f(b), fm = f((a + b) / 2);
      sum += simpson(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), 1e-16, 40);
    }
    return sum;
  };
  const double num = integrate([&](double x) { return x * std::exp(shift - x * x / 2); });
  const double den = integrate([&](double x) { return std::exp(shift - x * x / 2); });
  return num / den;
}

std::vector<int> criterion_ids(bool fast) {
  if (fast) return {1, 4, 5, 7, 8, 9, 11};
  return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
}

CriterionResult run_criterion(int id, const SuiteOptions& options) {
  using Fn = CriterionResult (*)(const SuiteOptions&);
  static constexpr Fn table[] = {exact_recovery,        covariance_calibration, band_coverage,
                                 reweighting_gain,      curvature_bias,         sampson_bias,
                                 parabolic_projection,  truncated_mean_oracle,  type_constrained_sanity,
                                 center_bias,           determinism};
  if (id < 1 || id > 11) fail_config("unknown acceptance criterion");
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = table[id - 1](options);
  } catch (const FitError& e) {
    static constexpr const char* names[] = {
        "exact-data recovery", "covariance calibration", "band coverage", "reweighting gain",
        "curvature-bias removal", "Sampson-bias demonstration", "parabolic projection",
        "truncated-mean oracle", "type-constrained sanity", "center bias", "determinism"};
    r.id = id;
    r.name = names[id - 1];
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  if (r.seconds == 0)
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<CriterionResult> run_suite(const SuiteOptions& options) {
  std::vector<CriterionResult> out;
  for (int id : criterion_ids(options.fast)) out.push_back(run_criterion(id, options));
  return out;
}

std::string format_report(const std::vector<CriterionResult>& results, bool with_timing) {
  std::ostringstream os;
  for (const CriterionResult& r : results) {
    os << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.detail;
    if (with_timing) os << fmt(" (%.2f s)", r.seconds);
    os << '\n';
  }
  return os.str();
}

}  // namespace conicfit::acceptance
