#include "test_support.hpp"

#include <Eigen/Geometry>
#include <gtest/gtest.h>

namespace conicfit {
namespace {

using testing::line_angle;

const ConicVector kUnitCircle = (ConicVector() << 1, 0, 1, 0, 0, -1).finished();
const ConicVector kWideEllipse = (ConicVector() << 0.25, 0, 1, 0, 0, -1).finished();  // x^2/4 + y^2 = 1

ConicVector vec(std::initializer_list<double> v) {
  ConicVector g;
  std::copy(v.begin(), v.end(), g.data());
  return g;
}

double curve_scale(const ConicVector& g, const Point2& p) {
  return g.norm() * std::max(1.0, p.squaredNorm());
}

// --- design vector and gradient ---------------------------------------------

TEST(DesignVector, Examples) {
  EXPECT_EQ(design_vector(Point2(0, 0)), vec({0, 0, 0, 0, 0, 1}));
  EXPECT_EQ(design_vector(Point2(2, 3)), vec({4, 6, 9, 2, 3, 1}));
  EXPECT_EQ(design_vector(Point2(-1, 1)), vec({1, -1, 1, -1, 1, 1}));
}

TEST(DesignGradient, Examples) {
  const DesignGradient g0 = design_gradient(Point2(0, 0));
  EXPECT_EQ(ConicVector(g0.col(0)), vec({0, 0, 0, 1, 0, 0}));
  EXPECT_EQ(ConicVector(g0.col(1)), vec({0, 0, 0, 0, 1, 0}));
  const DesignGradient g1 = design_gradient(Point2(1, 2));
  EXPECT_EQ(ConicVector(g1.col(0)), vec({2, 2, 0, 1, 0, 0}));
  EXPECT_EQ(ConicVector(g1.col(1)), vec({0, 1, 4, 0, 1, 0}));
}

TEST(DesignGradient, CentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  const double h = 1e-5;
  for (int rep = 0; rep < 100; ++rep) {
    const Point2 p(u(rng), u(rng));
    const DesignGradient g = design_gradient(p);
    for (int mu = 0; mu < 2; ++mu) {
      Point2 e = Point2::Zero();
      e(mu) = h;
      const ConicVector fd = (design_vector(Point2(p + e)) - design_vector(Point2(p - e))) / (2 * h);
      EXPECT_LT((fd - g.col(mu)).norm(), 1e-8);
    }
  }
}

// --- C_N ---------------------------------------------------------------------

TEST(ConstraintCn, SinglePointAtOrigin) {
  const std::vector<Point2> p{{0, 0}};
  const std::vector<double> w{1};
  SymMatrix6 expected = SymMatrix6::Zero();
  expected(3, 3) = expected(4, 4) = 1;
  EXPECT_EQ(build_constraint_cn(p, w), expected);
}

TEST(ConstraintCn, SinglePointHandOuterProducts) {
  const std::vector<Point2> p{{1, 0}};
  const std::vector<double> w{1};
  // Gradients (2,0,0,1,0,0) and (0,1,0,0,1,0).
  const ConicVector dx = vec({2, 0, 0, 1, 0, 0}), dy = vec({0, 1, 0, 0, 1, 0});
  const SymMatrix6 hand = dx * dx.transpose() + dy * dy.transpose();
  EXPECT_EQ(build_constraint_cn(p, w), hand);
  EXPECT_EQ(hand(0, 0), 4);
  EXPECT_EQ(hand(0, 3), 2);
  EXPECT_EQ(hand(1, 4), 1);
}

TEST(ConstraintCn, LastRowAndColumnVanish) {
  std::mt19937_64 rng(12);
  const auto conic = testing::random_conic(rng, 15, ConicClass::Hyperbola);
  const auto w = testing::unit_weights(conic.points.size());
  const SymMatrix6 cn = build_constraint_cn(conic.points, w);
  EXPECT_EQ(cn.row(5).norm(), 0.0);
  EXPECT_EQ(cn.col(5).norm(), 0.0);
}

// --- curvature correction ---------------------------------------------------

TEST(CurvatureCorrect, Examples) {
  EXPECT_EQ(curvature_correct(kUnitCircle, 0.0), kUnitCircle);
  const ConicVector c = curvature_correct(kUnitCircle, 0.01);
  EXPECT_DOUBLE_EQ(c(5), -0.98);
  EXPECT_EQ(c.head<5>(), kUnitCircle.head<5>());
}

TEST(CurvatureCorrect, KeepsNormalisation) {
  std::mt19937_64 rng(13);
  const auto conic = testing::random_conic(rng, 20, ConicClass::Ellipse);
  const auto w = testing::unit_weights(conic.points.size());
  const SymMatrix6 cn = build_constraint_cn(conic.points, w);
  const ConicVector c = curvature_correct(conic.g, 0.3);
  EXPECT_NEAR(c.dot(cn * c), conic.g.dot(cn * conic.g), 1e-14 * conic.g.dot(cn * conic.g));
  EXPECT_EQ(curvature_transform(0.3) * conic.g, c);
}

TEST(CurvatureMatrix, LaplacianIdentity) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-10, 10);
  const SymMatrix6 l = curvature_matrix();
  const ConicVector lap = vec({2, 0, 2, 0, 0, 0});  // Laplacian of D
  for (int rep = 0; rep < 1000; ++rep) {
    const Point2 p(u(rng), u(rng));
    EXPECT_EQ(ConicVector(2 * l * design_vector(p)), lap);
  }
}

TEST(CurvatureMatrix, AnnihilatesConstraint) {
  std::mt19937_64 rng(15);
  const auto conic = testing::random_conic(rng, 20, ConicClass::Ellipse);
  const auto w = testing::unit_weights(conic.points.size());
  const SymMatrix6 cn = build_constraint_cn(conic.points, w);
  const SymMatrix6 l = curvature_matrix();
  EXPECT_EQ((l * cn).norm(), 0.0);
  EXPECT_EQ((cn * l.transpose()).norm(), 0.0);
}

// --- classify ----------------------------------------------------------------

TEST(Classify, Examples) {
  EXPECT_EQ(classify(kUnitCircle.normalized()), ConicClass::Ellipse);
  EXPECT_EQ(classify(vec({0, 1, 0, 0, 0, -1}).normalized()), ConicClass::Hyperbola);
  EXPECT_EQ(classify(vec({1, 0, 0, 0, -1, 0}).normalized()), ConicClass::Parabola);
  EXPECT_EQ(classify(vec({1, 0, -1, 0, 0, 0})), ConicClass::Degenerate);  // line pair
}

TEST(QuadricQ, MatchesDiscriminant) {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> n01;
  const SymMatrix6 q = parabolic_quadric();
  for (int rep = 0; rep < 100; ++rep) {
    ConicVector g;
    for (int k = 0; k < 6; ++k) g(k) = n01(rng);
    EXPECT_NEAR(g.dot(q * g), conic_discriminant(g), 1e-13 * g.squaredNorm());
  }
}

// --- elliptical frame --------------------------------------------------------

TEST(EllipticalFrame, WideEllipse) {
  const EllipticalFrame f = elliptical_frame(kWideEllipse);
  EXPECT_LT(f.center.norm(), 1e-15);
  EXPECT_NEAR(f.focal.x(), std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(f.focal.y(), 0.0, 1e-14);
  EXPECT_NEAR(std::cosh(f.coordinate), 2 / std::sqrt(3.0), 1e-14);
  EXPECT_FALSE(f.circular);
}

TEST(EllipticalFrame, ShiftedCircleFallsBack) {
  const EllipticalFrame f = elliptical_frame(vec({1, 0, 1, -2, -4, 4}));
  EXPECT_TRUE(f.circular);
  EXPECT_LT((f.center - Point2(1, 2)).norm(), 1e-14);
  EXPECT_NEAR(f.radius, 1.0, 1e-14);
}

TEST(EllipticalFrame, RoundTripReproducesCurve) {
  std::mt19937_64 rng(17);
  for (ConicClass kind : {ConicClass::Ellipse, ConicClass::Hyperbola}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto conic = testing::random_conic(rng, 8, kind);
      const EllipticalFrame f = elliptical_frame(conic.g);
      EXPECT_LT((f.focal_perp() - Point2(-f.focal.y(), f.focal.x())).norm(), 0.0 + 1e-300);
      for (int k = 0; k < 100; ++k) {
        const double t = kind == ConicClass::Ellipse ? 2 * std::numbers::pi * k / 100 : -2 + 0.04 * k;
        const Point2 x = f.curve_point(t);
        EXPECT_LT(std::abs(conic_value(conic.g, x)), 1e-8 * curve_scale(conic.g, x));
      }
    }
  }
}

TEST(EllipticalFrame, ParabolaHasNone) {
  try {
    elliptical_frame(vec({1, 0, 0, 0, -1, 0}));
    FAIL();
  } catch (const FitError& e) {
    EXPECT_STREQ(e.what(), "no elliptical frame");
  }
}

// --- nearest point -----------------------------------------------------------

TEST(NearestPoint, Examples) {
  const Point2 a = nearest_point(elliptical_frame(kUnitCircle), Point2(2, 0));
  EXPECT_LT((a - Point2(1, 0)).norm(), 1e-15);
  const Point2 b = nearest_point(elliptical_frame(kWideEllipse), Point2(0, 2));
  EXPECT_LT((b - Point2(0, 1)).norm(), 1e-14);
}

TEST(NearestPoint, CentreIsAmbiguous) {
  try {
    nearest_point(elliptical_frame(kWideEllipse), Point2(0, 0));
    FAIL();
  } catch (const FitError& e) {
    EXPECT_STREQ(e.what(), "ambiguous projection");
  }
}

// Euclidean foot point by dense parameter search plus golden refinement.
double euclidean_distance(const EllipticalFrame& f, const Point2& p) {
  constexpr int kSamples = 20000;
  auto dist = [&](double t) { return (f.curve_point(t) - p).norm(); };
  int best = 0;
  for (int k = 1; k < kSamples; ++k)
    if (dist(2 * std::numbers::pi * k / kSamples) < dist(2 * std::numbers::pi * best / kSamples)) best = k;
  double lo = 2 * std::numbers::pi * (best - 1) / kSamples, hi = 2 * std::numbers::pi * (best + 1) / kSamples;
  for (int it = 0; it < 80; ++it) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    (dist(m1) < dist(m2) ? hi : lo) = dist(m1) < dist(m2) ? m2 : m1;
  }
  return dist((lo + hi) / 2);
}

TEST(NearestPoint, CloseToEuclideanFootAndOnCurve) {
  std::mt19937_64 rng(18);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 10; ++rep) {
    const auto conic = testing::random_conic(rng, 12, ConicClass::Ellipse);
    const EllipticalFrame f = elliptical_frame(conic.g);
    for (const Point2& on : conic.points) {
      const Point2 p = on + 0.02 * Point2(n01(rng), n01(rng));
      const Point2 x = nearest_point(f, p);
      EXPECT_LT(std::abs(conic_value(conic.g, x)), 1e-10 * curve_scale(conic.g, x));
      const double best = euclidean_distance(f, p);
      EXPECT_LE((x - p).norm(), 1.1 * best + 1e-12);
    }
  }
}

TEST(NearestPoint, Idempotent) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> n01;
  for (ConicClass kind : {ConicClass::Ellipse, ConicClass::Hyperbola}) {
    const auto conic = testing::random_conic(rng, 30, kind);
    const EllipticalFrame f = elliptical_frame(conic.g);
    for (const Point2& on : conic.points) {
      const Point2 p = on + 0.05 * Point2(n01(rng), n01(rng));
      const Point2 once = nearest_point(f, p);
      EXPECT_LT((nearest_point(f, once) - once).norm(), 1e-10 * std::max(1.0, once.norm()));
      EXPECT_LT(std::abs(conic_value(conic.g, once)), 1e-10 * curve_scale(conic.g, once));
    }
  }
}

// --- weights -----------------------------------------------------------------

TEST(OptimalWeights, ConstantOnCircle) {
  const auto pts = sample_curve(CurveSpec::ellipse(1, 1, 0, 6), 10);
  const ConicVector g = kUnitCircle / 3.0;
  const auto w = optimal_weights(pts, g, elliptical_frame(g));
  const double expect = 1.0 / (10 * 4 * g(0) * g(0));
  for (double wi : w) EXPECT_NEAR(wi, expect, 1e-12 * expect);
}

TEST(OptimalWeights, NarrowEllipseTipVersusFlank) {
  const ConicVector g = vec({1, 0, 100, 0, 0, -1});
  const std::vector<Point2> pts{{1, 0}, {0, 0.1}};
  const auto w = optimal_weights(pts, g, elliptical_frame(g));
  // |grad Z|^2 = 4 at the tip and 400 on the flank.
  EXPECT_NEAR(w[1] / w[0], 4.0 / 400.0, 1e-12);
}

TEST(OptimalWeights, HomogeneousInG) {
  auto pts = add_noise(testing::fig2_points(), NoiseSpec{0.001, 5});
  const GenericFit fit = generic_fit(pts);
  const EllipticalFrame f = elliptical_frame(fit.g0);
  const auto w1 = optimal_weights(pts, fit.g0, f);
  const auto w3 = optimal_weights(pts, ConicVector(3 * fit.g0), f);
  for (std::size_t i = 0; i < w1.size(); ++i) EXPECT_NEAR(w3[i] * 9 / w1[i], 1.0, 1e-12);
  const GenericFit a = generic_fit(pts, Weighting::Optimal, w1);
  const GenericFit b = generic_fit(pts, Weighting::Optimal, w3);
  // Weights scaled by 1/9 scale C_N by 1/9, so the normalised vector triples.
  EXPECT_LT((3 * a.g0 - b.g0).norm(), 1e-9 * b.g0.norm());
  EXPECT_LT(line_angle(a.g0, b.g0), 1e-10);
}

TEST(SampsonWeights, MatchOptimalOnCurve) {
  std::mt19937_64 rng(20);
  const auto conic = testing::random_conic(rng, 20, ConicClass::Ellipse);
  const auto a = sampson_weights(conic.points, conic.g);
  const auto b = optimal_weights(conic.points, conic.g, elliptical_frame(conic.g));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i] / b[i], 1.0, 1e-12);
}

TEST(SampsonWeights, CircleOffCurveClosedForm) {
  const double delta = 0.05;
  const std::vector<Point2> pts{{1 + delta, 0}, {0, 1}};
  const auto s = sampson_weights(pts, kUnitCircle);
  const auto o = optimal_weights(pts, kUnitCircle, elliptical_frame(kUnitCircle));
  EXPECT_NEAR(s[0], 1 / (2 * 4 * (1 + delta) * (1 + delta)), 1e-15);
  EXPECT_NEAR(s[0] / o[0], 1 / ((1 + delta) * (1 + delta)), 1e-14);
}

TEST(Weights, VanishingGradientIsFloored) {
  // A point at the centre of a circle has zero gradient at the measured point.
  const std::vector<Point2> pts{{0, 0}, {1, 0}, {0, 1}};
  const auto w = sampson_weights(pts, kUnitCircle);
  EXPECT_TRUE(std::isfinite(w[0]));
  EXPECT_NEAR(w[0] / w[1], 1e8, 1.0);
}

// --- Euclidean invariance ---------------------------------------------------

struct Geometry {
  Point2 center;
  double a, b;
  Point2 axis;
};

Geometry geometry_of(const ConicVector& g) {
  const EllipticalFrame f = elliptical_frame(g);
  Geometry out;
  out.center = f.center;
  out.a = f.focal.norm() * std::cosh(f.coordinate);
  out.b = f.focal.norm() * std::sinh(f.coordinate);
  out.axis = f.focal.normalized();
  return out;
}

TEST(Invariants, EuclideanMotionMovesTheFit) {
  std::mt19937_64 rng(21);
  const auto pts = add_noise(testing::random_conic(rng, 30, ConicClass::Ellipse).points,
                             NoiseSpec{0.01, 21});
  const double angle = 0.7;
  const Point2 shift(0.3, -1.2);
  const Eigen::Matrix2d r = Eigen::Rotation2Dd(angle).toRotationMatrix();
  std::vector<Point2> moved;
  for (const auto& p : pts) moved.push_back(r * p + shift);

  const Geometry g1 = geometry_of(generic_fit(pts).g0);
  const Geometry g2 = geometry_of(generic_fit(moved).g0);
  EXPECT_LT((r * g1.center + shift - g2.center).norm(), 1e-8);
  EXPECT_NEAR(g1.a, g2.a, 1e-8);
  EXPECT_NEAR(g1.b, g2.b, 1e-8);
  EXPECT_LT(line_angle(Point2(r * g1.axis), g2.axis), 1e-8);
}

}  // namespace
}  // namespace conicfit
