#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

namespace conicfit {
namespace {

using testing::line_angle;

CurveSpec posed_ellipse() {
  CurveSpec c = CurveSpec::ellipse(2.0, 0.5, -0.4, 2.2);
  c.pose.rotation = 0.6;
  c.pose.translation = Point2(-1, 3);
  return c;
}

CurveSpec posed_parabola() {
  CurveSpec c = CurveSpec::parabola(0.3, -1, 2);
  c.pose.rotation = -1.1;
  c.pose.translation = Point2(0.5, 0.25);
  return c;
}

double implicit_scale(const ConicVector& g, const Point2& p) {
  return g.norm() * std::max(1.0, p.squaredNorm());
}

// --- sampling -----------------------------------------------------------------

TEST(SampleCurve, CircleQuadrant) {
  const auto pts = sample_curve(CurveSpec::ellipse(1, 1, 0, std::numbers::pi / 2), 3);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_LT((pts[0] - Point2(1, 0)).norm(), 1e-16);
  EXPECT_LT((pts[1] - Point2(std::sqrt(0.5), std::sqrt(0.5))).norm(), 1e-15);
  EXPECT_LT((pts[2] - Point2(0, 1)).norm(), 1e-16);
}

TEST(SampleCurve, PointsLieOnTrueConic) {
  for (CurveSpec spec : {posed_ellipse(), posed_parabola(), testing::fig2_points().empty()
                                                                 ? CurveSpec{}
                                                                 : CurveSpec::ellipse(1, 0.1, 0, 1.5)}) {
    for (Spacing spacing : {Spacing::Parameter, Spacing::ArcLength}) {
      spec.spacing = spacing;
      const ConicVector g = spec.true_conic();
      EXPECT_NEAR(g.norm(), 1.0, 1e-15);
      EXPECT_EQ(canonical_sign(g), g);
      for (const Point2& p : sample_curve(spec, 37))
        EXPECT_LT(std::abs(conic_value(g, p)), 1e-12 * implicit_scale(g, p));
    }
  }
}

TEST(SampleCurve, EndpointsIncluded) {
  const CurveSpec spec = posed_ellipse();
  for (Spacing spacing : {Spacing::Parameter, Spacing::ArcLength}) {
    CurveSpec s = spec;
    s.spacing = spacing;
    const auto ts = sample_parameters(s, 11);
    EXPECT_EQ(ts.front(), s.t_begin);
    EXPECT_EQ(ts.back(), s.t_end);
  }
}

TEST(SampleCurve, ArcLengthSpacingHasEqualSteps) {
  CurveSpec spec = CurveSpec::ellipse(1, 0.1, 0, std::numbers::pi / 2);
  spec.spacing = Spacing::ArcLength;
  // Dense polyline length between consecutive samples.
  auto length = [&](double t0, double t1) {
    double len = 0;
    Point2 prev = spec.point(t0);
    for (int k = 1; k <= 2000; ++k) {
      const Point2 next = spec.point(t0 + (t1 - t0) * k / 2000);
      len += (next - prev).norm();
      prev = next;
    }
    return len;
  };
  const auto ts = sample_parameters(spec, 9);
  const double first = length(ts[0], ts[1]);
  for (std::size_t i = 1; i + 1 < ts.size(); ++i)
    EXPECT_NEAR(length(ts[i], ts[i + 1]), first, 1e-6 * first);
}

TEST(SampleCurve, NarrowQuadrantRoundTrip) {
  const CurveSpec spec = CurveSpec::ellipse(1.0, 0.1, 0, std::numbers::pi / 2);
  const GenericFit fit = generic_fit(sample_curve(spec, 20));
  EXPECT_LT(line_angle(fit.g0, spec.true_conic()), 1e-8);
}

TEST(CurveSpec, OutwardNormal) {
  for (const CurveSpec& spec : {posed_ellipse(), posed_parabola()}) {
    const ConicVector g = spec.true_conic();
    for (double t : sample_parameters(spec, 15)) {
      const Point2 p = spec.point(t), n = spec.outward_normal(t);
      EXPECT_NEAR(n.norm(), 1.0, 1e-15);
      const Point2 grad = conic_gradient(g, p);
      EXPECT_LT(std::abs(grad.x() * n.y() - grad.y() * n.x()), 1e-12 * grad.norm());
      // Outward: moving along n leaves the convex region (Z changes sign
      // the same way as it does going away from the interior point).
      const Point2 interior =
          spec.is_ellipse() ? spec.pose.translation
                            : spec.pose.apply(Point2(0, std::get<ParabolaShape>(spec.shape).focal_length));
      const double inside_sign = std::copysign(1.0, conic_value(g, interior));
      EXPECT_LT(inside_sign * conic_value(g, Point2(p + 1e-3 * n)), 0.0);
    }
  }
}

TEST(CurveSpec, ValidationErrors) {
  auto kind_of = [](const CurveSpec& spec) {
    try {
      spec.validate();
    } catch (const FitError& e) {
      return e.kind();
    }
    return ErrorKind::Input;  // sentinel: nothing thrown
  };
  EXPECT_EQ(kind_of(CurveSpec::ellipse(0.5, 1, 0, 1)), ErrorKind::Config);
  EXPECT_EQ(kind_of(CurveSpec::ellipse(1, 0, 0, 1)), ErrorKind::Config);
  EXPECT_EQ(kind_of(CurveSpec::ellipse(1, 1, 1, 1)), ErrorKind::Config);
  EXPECT_EQ(kind_of(CurveSpec::parabola(-0.1, 0, 1)), ErrorKind::Config);
  EXPECT_NO_THROW(posed_parabola().validate());
  EXPECT_THROW(sample_curve(posed_ellipse(), 1), FitError);
}

// --- noise ------------------------------------------------------------------

TEST(Noise, ZeroSigmaIsIdentity) {
  const auto pts = sample_curve(posed_ellipse(), 20);
  EXPECT_EQ(add_noise(pts, NoiseSpec{0, 7}), pts);
}

TEST(Noise, DeterministicAndPerPointStreams) {
  const auto pts = sample_curve(posed_ellipse(), 30);
  const NoiseSpec noise{0.01, 99};
  EXPECT_EQ(add_noise(pts, noise, 4), add_noise(pts, noise, 4));
  EXPECT_NE(add_noise(pts, noise, 4), add_noise(pts, noise, 5));
  // A prefix of the points sees the same offsets.
  const std::vector<Point2> head(pts.begin(), pts.begin() + 10);
  const auto all = add_noise(pts, noise, 4);
  const auto part = add_noise(head, noise, 4);
  for (std::size_t i = 0; i < head.size(); ++i) EXPECT_EQ(all[i], part[i]);
}

TEST(Noise, LawOfLargeNumbers) {
  const double sigma = 0.5;
  const std::vector<Point2> zeros(1000000, Point2::Zero());
  const auto noisy = add_noise(zeros, NoiseSpec{sigma, 2024});
  RunningMoments<2> m;
  for (const Point2& p : noisy) m.add(p);
  EXPECT_LT(m.mean.cwiseAbs().maxCoeff(), 4 * sigma / 1e3);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(m.covariance()(i, i), sigma * sigma, 0.01 * sigma * sigma);
  EXPECT_LT(std::abs(m.covariance()(0, 1)), 0.01 * sigma * sigma);
}

TEST(Noise, NegativeSigmaRejected) {
  EXPECT_THROW(add_noise(sample_curve(posed_ellipse(), 5), NoiseSpec{-1, 0}), FitError);
}

TEST(NormalQuantile, InvertsTheCdf) {
  for (double u : {1e-300, 1e-12, 1e-4, 0.02, 0.3, 0.5, 0.7, 0.98, 1 - 1e-4, 1 - 1e-12}) {
    const double x = normal_quantile(u);
    const double back = 0.5 * std::erfc(-x / std::numbers::sqrt2);
    EXPECT_NEAR(back, u, 1e-14 * std::min(u, 1 - u) + 1e-16) << u;
  }
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
  EXPECT_EQ(normal_quantile(0.5), 0.0);
  EXPECT_THROW(normal_quantile(0.0), FitError);
  EXPECT_THROW(normal_quantile(1.0), FitError);
}

TEST(CounterUniform, OpenUnitInterval) {
  for (std::uint64_t k = 0; k < 100000; ++k) {
    const double u = counter_uniform(1, 2, k, k & 1);
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

// --- running moments ----------------------------------------------------------

TEST(RunningMoments, MatchTwoPassFormulae) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  std::vector<Eigen::Vector3d> xs;
  RunningMoments<3> m;
  for (int k = 0; k < 500; ++k) {
    Eigen::Vector3d x(1e6 + n01(rng), 2 * n01(rng), -3 + 0.1 * n01(rng));
    xs.push_back(x);
    m.add(x);
  }
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& x : xs) mean += x;
  mean /= 500;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
  cov /= 499;
  EXPECT_LT((m.mean - mean).norm(), 1e-9);
  EXPECT_LT(testing::rel_diff(m.covariance(), cov), 1e-10);
}

// --- ensembles ------------------------------------------------------------------

EnsembleRequest fig2(int trials) {
  EnsembleRequest r;
  r.curve = CurveSpec::ellipse(1.0, 0.1, 0, std::numbers::pi / 2);
  r.noise = NoiseSpec{0.001, 31};
  r.n_points = 20;
  r.n_trials = trials;
  return r;
}

TEST(Ensemble, SingleExactTrial) {
  EnsembleRequest r = fig2(1);
  r.noise.sigma = 0;
  r.options.center = true;
  r.threads = 1;
  const TrialEnsemble ens = run_ensemble(r);
  ASSERT_TRUE(ens.trials[0].ok);
  const ReweightedFit direct = fit_with_reweight(sample_curve(r.curve, 20));
  EXPECT_EQ(ens.summary.g0.mean, direct.final.g0);
  EXPECT_EQ(ens.summary.g0.covariance().norm(), 0.0);
  EXPECT_EQ(ens.summary.sigma2.mean(0), direct.final.sigma2_hat);
  EXPECT_EQ(ens.summary.center.covariance().norm(), 0.0);
}

TEST(Ensemble, IdenticalAcrossThreadCounts) {
  EnsembleRequest r = fig2(64);
  r.options.type_target = ConicClass::Ellipse;
  r.test_points = {Point2(1, 0), Point2(0, 0.1)};
  r.threads = 1;
  const TrialEnsemble a = run_ensemble(r);
  for (int threads : {2, 5}) {
    r.threads = threads;
    const TrialEnsemble b = run_ensemble(r);
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
      EXPECT_EQ(a.trials[i].fit.g0, b.trials[i].fit.g0);
      EXPECT_EQ(a.trials[i].truncated->mean, b.trials[i].truncated->mean);
    }
    EXPECT_EQ(a.summary.g0.mean, b.summary.g0.mean);
    EXPECT_EQ(a.summary.g0.m2, b.summary.g0.m2);
    EXPECT_EQ(a.summary.coverage[0].beyond[1], b.summary.coverage[0].beyond[1]);
  }
}

TEST(Ensemble, FailuresAreRecordedNotThrown) {
  EnsembleRequest r = fig2(5);
  r.n_points = 5;
  r.threads = 1;
  const TrialEnsemble ens = run_ensemble(r);
  EXPECT_EQ(ens.summary.failed, 5u);
  for (const TrialRecord& rec : ens.trials) {
    EXPECT_FALSE(rec.ok);
    EXPECT_EQ(rec.error, "underdetermined");
  }
}

TEST(Ensemble, RejectsZeroTrials) { EXPECT_THROW(run_ensemble(fig2(0)), FitError); }

// Over 1e4 narrow-quadrant trials nothing fails, and lambda0 averages to (N - 5)/N sigma^2:
// five fitted degrees of freedom are absorbed (no correction is applied).
TEST(Ensemble, NarrowQuadrantNoiseCalibrationAndNoFailures) {
  const TrialEnsemble ens = run_ensemble(fig2(10000));
  EXPECT_EQ(ens.summary.failed, 0u);
  const double expected = 15.0 / 20.0 * 1e-6;
  EXPECT_NEAR(ens.summary.sigma2.mean(0), expected, 3 * ens.summary.sigma2.standard_error()(0));
  // Mean sqrt(lambda0) lies in the band quoted for this regime.
  double root = 0;
  for (const TrialRecord& rec : ens.trials) root += std::sqrt(rec.fit.sigma2_hat);
  root /= 10000;
  EXPECT_GT(root, 0.0008);
  EXPECT_LT(root, 0.0012);
}

class ThreadsEnv : public ::testing::Test {
 protected:
  void TearDown() override { unsetenv("CONIC_THREADS"); }
};

TEST_F(ThreadsEnv, ResolvesFromEnvironment) {
  setenv("CONIC_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(), 3);
  EXPECT_EQ(resolve_threads(2), 2);
  setenv("CONIC_THREADS", "0", 1);
  EXPECT_GE(resolve_threads(), 1);
  setenv("CONIC_THREADS", "many", 1);
  try {
    resolve_threads();
    FAIL();
  } catch (const FitError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

}  // namespace
}  // namespace conicfit
