#include "test_support.hpp"

#include "app/acceptance.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <functional>

namespace conicfit {
namespace {

using testing::line_angle;

std::vector<Point2> noisy_fig2(std::uint64_t trial, double sigma = 0.001) {
  return add_noise(testing::fig2_points(), NoiseSpec{sigma, 202}, trial);
}

std::vector<Point2> noisy_fig5(std::uint64_t trial) {
  return add_noise(sample_curve(CurveSpec::parabola(0.01, 0, 0.25), 20), NoiseSpec{0.001, 505},
                   trial);
}

// Adaptive Simpson quadrature, the independent route for the truncated mean.
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

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  // Panels first: x exp(-x^2/2) on [0, 40] has zero Simpson estimate overall.
  constexpr int kPanels = 64;
  double sum = 0;
  for (int k = 0; k < kPanels; ++k) {
    const double lo = a + (b - a) * k / kPanels, hi = a + (b - a) * (k + 1) / kPanels;
    const double fa = f(lo), fb = f(hi), fm = f((lo + hi) / 2);
    sum += simpson(f, lo, hi, fa, fm, fb, (hi - lo) / 6 * (fa + 4 * fm + fb), tol / kPanels, 40);
  }
  return sum;
}

double quadrature_mean(double x0) {
  // Shifted by exp(x0^2/2) where that helps, so both integrals stay O(1).
  const double shift = x0 > 0 ? x0 * x0 / 2 : 0.0;
  const double hi = std::max(x0, 0.0) + 40;
  const double num = integrate([&](double x) { return x * std::exp(shift - x * x / 2); }, x0, hi, 1e-14);
  const double den = integrate([&](double x) { return std::exp(shift - x * x / 2); }, x0, hi, 1e-14);
  return num / den;
}

// --- truncated_mean_factor --------------------------------------------------

TEST(TruncatedMeanFactor, KnownValues) {
  EXPECT_NEAR(truncated_mean_factor(0.0), 0.7978845608028654, 1e-15);
  EXPECT_LT(truncated_mean_factor(-8.0), 1e-13);
  EXPECT_GE(truncated_mean_factor(-8.0), 0.0);
}

TEST(TruncatedMeanFactor, QuadratureOracle) {
  for (double x0 : {-8.0, -2.0, 0.0, 1.0, 3.0, 6.0})
    EXPECT_NEAR(truncated_mean_factor(x0), quadrature_mean(x0), 1e-10) << x0;
}

TEST(TruncatedMeanFactor, MillsRatioBoundsAndMonotone) {
  // Below about -38 the factor underflows to zero; monotonicity is checked above that.
  double prev = truncated_mean_factor(-30);
  for (double x = -29.5; x < 60; x += 0.5) {
    const double v = truncated_mean_factor(x);
    EXPECT_GE(v, std::max(x, 0.0));
    EXPECT_GT(v, prev) << x;
    if (x >= 6) {
      EXPECT_LE(v, x + 1.05 / x);
    }
    prev = v;
  }
  for (double x : {6.0, 8.0, 12.0}) EXPECT_NEAR(truncated_mean_factor(x), quadrature_mean(x), 1e-9 * x);
}

TEST(TruncatedMeanFactor, NoOverflowFarOut) {
  for (double x : {36.0, 37.0, 100.0, 1e4, 1e8}) {
    const double v = truncated_mean_factor(x);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(v, x + 1 / x, 3 / (x * x * x) + 4e-16 * x);
  }
  EXPECT_THROW(truncated_mean_factor(std::nan("")), FitError);
}

// --- project_to_parabola -----------------------------------------------------

struct Projectors {
  SymMatrix6 p0, p_bar;
  ConicVector c_pinv_qg;
};

Projectors projectors(const GenericFit& fit, const ConicVector& g) {
  SymMatrix6 c_pinv = SymMatrix6::Zero();
  c_pinv.topLeftCorner<5, 5>() = fit.constraint.topLeftCorner<5, 5>().inverse();
  const ConicVector qg = parabolic_quadric() * g;
  Projectors out;
  out.p0 = g * (fit.constraint * g).transpose();
  out.c_pinv_qg = c_pinv * qg;
  out.p_bar = out.c_pinv_qg * qg.transpose() / qg.dot(c_pinv * qg);
  return out;
}

TEST(ProjectToParabola, AlreadyParabolic) {
  const auto pts = sample_curve(CurveSpec::parabola(0.3, -1, 1.5), 12);
  const GenericFit fit = generic_fit(pts);
  const ParabolicFit pf = project_to_parabola(fit);
  EXPECT_EQ(pf.iterations, 0);
  EXPECT_EQ(pf.g_bar_raw, fit.g0_raw);
}

TEST(ProjectToParabola, ConstraintsAndRank) {
  for (std::uint64_t t = 0; t < 100; ++t) {
    const GenericFit fit = t % 2 ? generic_fit(noisy_fig2(t)) : fit_with_reweight(noisy_fig5(t)).final;
    const ParabolicFit pf = project_to_parabola(fit);
    const ConicVector& g = pf.g_bar_raw;
    EXPECT_LE(pf.iterations, kParabolaMaxIterations);
    EXPECT_LT(std::abs(g.dot(parabolic_quadric() * g)), 1e-12 * g.head<3>().squaredNorm());
    EXPECT_LT(pf.residual, 1e-12 * g.squaredNorm());
    EXPECT_NEAR(g.dot(fit.constraint * g), 1.0, 1e-10);
    EXPECT_EQ(pf.g_bar, curvature_correct(g, fit.sigma2_hat));

    Eigen::SelfAdjointEigenSolver<SymMatrix6> es(pf.v_bar);
    const auto ev = es.eigenvalues();
    EXPECT_LT(std::abs(ev(0)), 1e-10 * ev(5));
    EXPECT_LT(std::abs(ev(1)), 1e-10 * ev(5));
    EXPECT_GT(ev(2), 1e-10 * ev(5));
  }
}

TEST(ProjectToParabola, ProjectorAlgebra) {
  const GenericFit fit = generic_fit(noisy_fig2(3));
  const ParabolicFit pf = project_to_parabola(fit);
  const Projectors p = projectors(fit, pf.g_bar_raw);
  EXPECT_LT((p.p0 * p.p0 - p.p0).norm(), 1e-10 * p.p0.norm());
  EXPECT_LT((p.p_bar * p.p_bar - p.p_bar).norm(), 1e-10 * p.p_bar.norm());
  const double s_norm = fit.scatter.norm();
  EXPECT_LT((pf.s_bar * pf.g_bar_raw).norm(), 1e-8 * s_norm * pf.g_bar_raw.norm());
  EXPECT_LT((pf.s_bar * p.c_pinv_qg).norm(), 1e-8 * s_norm * p.c_pinv_qg.norm());
  Eigen::SelfAdjointEigenSolver<SymMatrix6> es(pf.s_bar);
  EXPECT_LT(std::abs(es.eigenvalues()(1)), 1e-8 * es.eigenvalues()(5));
  EXPECT_GT(es.eigenvalues()(2), 1e-8 * es.eigenvalues()(5));
}

TEST(ProjectToParabola, LocalMahalanobisMinimum) {
  for (std::uint64_t t = 0; t < 20; ++t) {
    const GenericFit fit = generic_fit(noisy_fig2(t, 0.004));
    const ParabolicFit pf = project_to_parabola(fit);
    const auto probe = acceptance::minimality_probe(fit, pf, 100, 900 + t);
    EXPECT_EQ(probe.failures, 0) << "trial " << t << " worst " << probe.worst_relative_gain;
  }
}

TEST(ProjectToParabola, ShallowParabolaConstrainedSpreadIsSmaller) {
  // Signed algebraic distance at a far point of the true parabola.
  const CurveSpec curve = CurveSpec::parabola(0.01, 0, 0.25);
  const Point2 far = curve.point(0.5);
  RunningMoments<1> generic, constrained;
  for (std::uint64_t t = 0; t < 300; ++t) {
    const GenericFit fit = fit_with_reweight(noisy_fig5(t)).final;
    const ParabolicFit pf = project_to_parabola(fit);
    auto dist = [&](const ConicVector& g) {
      return conic_value(g, far) / conic_gradient(g, far).norm();
    };
    generic.add(Eigen::Matrix<double, 1, 1>(dist(fit.g0)));
    constrained.add(Eigen::Matrix<double, 1, 1>(dist(pf.g_bar)));
  }
  EXPECT_LT(constrained.covariance()(0, 0), generic.covariance()(0, 0));
}

// --- type_constrained_mean ---------------------------------------------------

GenericFit with_sigma2(GenericFit fit, double s2) {
  fit.sigma2_hat = s2;
  return fit;
}

TEST(TypeConstrainedMean, FarTailReturnsG0) {
  const GenericFit fit = generic_fit(noisy_fig2(4));
  const ParabolicFit pf = project_to_parabola(fit);
  const double gsg = pf.g_bar_raw.dot(fit.scatter * pf.g_bar_raw);
  const double n = static_cast<double>(fit.n_points);
  const GenericFit tuned = with_sigma2(fit, gsg / (1 + 64 / n));  // makes x0 = -8
  const TruncatedPosterior tp = type_constrained_mean(tuned, pf, ConicClass::Ellipse);
  EXPECT_NEAR(tp.x0, -8.0, 1e-10);
  EXPECT_LT((tp.mean_unnormalized - curvature_correct(fit.g0_raw, tuned.sigma2_hat)).norm(),
            1e-10 * fit.g0.norm());
}

TEST(TypeConstrainedMean, RightTypeOnPencilAwayFromBoundary) {
  for (std::uint64_t t = 0; t < 200; ++t) {
    const GenericFit fit = generic_fit(noisy_fig2(t, 0.002));
    const ParabolicFit pf = project_to_parabola(fit);
    const TruncatedPosterior tp = type_constrained_mean(fit, pf, ConicClass::Ellipse);
    EXPECT_EQ(classify(tp.mean), ConicClass::Ellipse);
    EXPECT_NEAR(tp.mean.dot(fit.constraint * tp.mean), 1.0, 1e-10);
    const ConicVector along = tp.mean_unnormalized - fit.g0, chord = pf.g_bar - fit.g0;
    if (classify(fit.g0) == ConicClass::Ellipse) {
      EXPECT_LT(tp.x0, 0.0);
      if (along.norm() > 0) {
        // Roundoff in the subtraction dominates when the step is tiny.
        EXPECT_LT(line_angle(along, chord), 1e-10 + 1e-15 * fit.g0.norm() / along.norm());
        EXPECT_LE(along.dot(chord), 0.0);  // never between G0 and the boundary
      }
    }
  }
}

TEST(TypeConstrainedMean, WrongTypeForcedBeyondParabola) {
  for (std::uint64_t t = 0; t < 200; ++t) {
    const GenericFit fit = fit_with_reweight(noisy_fig2(t)).final;
    const ParabolicFit pf = project_to_parabola(fit);
    const TruncatedPosterior tp = type_constrained_mean(fit, pf, ConicClass::Hyperbola);
    EXPECT_GT(tp.x0, 0.0);
    EXPECT_EQ(classify(tp.mean), ConicClass::Hyperbola) << t;
    const ConicVector along = tp.mean_unnormalized - fit.g0, chord = pf.g_bar - fit.g0;
    EXPECT_LT(line_angle(along, chord), 1e-10);
    EXPECT_GT(along.norm(), chord.norm());  // past the parabola, on the far side
  }
}

TEST(TypeConstrainedMean, MonotoneTowardG0) {
  const GenericFit fit = generic_fit(noisy_fig2(9, 0.001));
  ASSERT_EQ(classify(fit.g0), ConicClass::Ellipse);
  const ParabolicFit pf = project_to_parabola(fit);
  const double gsg = pf.g_bar_raw.dot(fit.scatter * pf.g_bar_raw);
  double prev = std::numeric_limits<double>::infinity();
  for (double x = 0.5; x < 8; x += 0.5) {  // beyond ~8 the offset underflows to 0
    const double n = static_cast<double>(fit.n_points);
    const GenericFit tuned = with_sigma2(fit, gsg / (1 + x * x / n));
    const TruncatedPosterior tp = type_constrained_mean(tuned, pf, ConicClass::Ellipse);
    const double offset = (tp.mean_unnormalized - tuned.correction() * fit.g0_raw).norm();
    EXPECT_LT(offset, prev) << x;
    prev = offset;
  }
}

TEST(TypeConstrainedMean, BoundaryCaseStepsAlongNormal) {
  const GenericFit fit = generic_fit(noisy_fig2(10));
  ParabolicFit pf = project_to_parabola(fit);
  pf.g_bar_raw = fit.g0_raw;  // pretend the generic fit were itself parabolic
  for (ConicClass target : {ConicClass::Ellipse, ConicClass::Hyperbola}) {
    const TruncatedPosterior tp = type_constrained_mean(fit, pf, target);
    EXPECT_TRUE(tp.boundary_case);
    EXPECT_EQ(tp.x0, 0.0);
    const ConicVector raw = fit.correction().inverse() * tp.mean_unnormalized;
    const double dq = conic_discriminant(raw) - conic_discriminant(fit.g0_raw);
    EXPECT_EQ(dq > 0, target == ConicClass::Ellipse);
  }
}

TEST(TypeConstrainedMean, ParabolaTargetRejected) {
  const GenericFit fit = generic_fit(noisy_fig2(11));
  const ParabolicFit pf = project_to_parabola(fit);
  try {
    type_constrained_mean(fit, pf, ConicClass::Parabola);
    FAIL();
  } catch (const FitError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

}  // namespace
}  // namespace conicfit
