#pragma once

#include "conicfit/param_propagation.hpp"
#include "conicfit/type_specific.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace conicfit {

struct EllipseShape {
  double a = 1;
  double b = 1;
};

struct ParabolaShape {
  double focal_length = 1;  // y = x^2 / (4 f)
};

enum class Spacing { Parameter, ArcLength };

struct Pose {
  double rotation = 0;  // radians, applied before the translation
  Point2 translation = Point2::Zero();

  Point2 apply(const Point2& p) const;
  Point2 rotate(const Point2& v) const;
};

/// A noise-free curve and the stretch of it that gets sampled. The parameter
/// is the angle theta of (a cos theta, b sin theta) for an ellipse and the
/// abscissa x for a parabola.
struct CurveSpec {
  std::variant<EllipseShape, ParabolaShape> shape = EllipseShape{};
  double t_begin = 0;
  double t_end = 1;
  Spacing spacing = Spacing::Parameter;
  Pose pose;

  static CurveSpec ellipse(double a, double b, double t_begin, double t_end);
  static CurveSpec parabola(double focal_length, double x_begin, double x_end);

  void validate() const;
  bool is_ellipse() const { return std::holds_alternative<EllipseShape>(shape); }

  Point2 point(double t) const;
  /// Unit normal pointing away from the convex side's interior (outward for
  /// an ellipse, away from the focus for a parabola).
  Point2 outward_normal(double t) const;
  /// True conic with unit Euclidean norm and canonical sign.
  ConicVector true_conic() const;
};

/// Points at equal steps of the curve parameter (or of arc length), endpoints
/// included.
std::vector<Point2> sample_curve(const CurveSpec& spec, int n_points);

/// Parameter values used by sample_curve.
std::vector<double> sample_parameters(const CurveSpec& spec, int n_points);

struct NoiseSpec {
  double sigma = 0;
  std::uint64_t seed = 0;
};

/// Uniform in (0, 1) from the stream (seed, trial, point, coordinate).
double counter_uniform(std::uint64_t seed, std::uint64_t trial, std::uint64_t point,
                       std::uint64_t coord);

/// Standard normal quantile.
double normal_quantile(double u);

double counter_normal(std::uint64_t seed, std::uint64_t trial, std::uint64_t point,
                      std::uint64_t coord);

std::vector<Point2> add_noise(std::span<const Point2> points, const NoiseSpec& noise,
                              std::uint64_t trial = 0);

enum class Reweight { None, Optimal, Sampson };

std::string_view to_string(Reweight r);

struct PipelineOptions {
  Reweight reweight = Reweight::Optimal;
  bool curvature_correction = true;
  std::optional<ConicClass> type_target;
  bool center = false;
  bool keep_points = false;
};

struct TrialRecord {
  bool ok = false;
  std::string error;
  std::vector<Point2> points;  // only with keep_points
  GenericFit fit;
  std::optional<GenericFit> preliminary;
  bool reweight_fallback = false;
  ConicClass conic_class = ConicClass::Degenerate;
  std::optional<ParabolicFit> parabolic;
  std::optional<TruncatedPosterior> truncated;
  std::optional<CenterEstimate> center;
  std::string center_error;  // set when the centre was requested but failed
};

TrialRecord run_pipeline(std::span<const Point2> points, const PipelineOptions& options);

/// Running mean and covariance (Welford).
template <int Dim>
struct RunningMoments {
  std::size_t count = 0;
  Eigen::Matrix<double, Dim, 1> mean = Eigen::Matrix<double, Dim, 1>::Zero();
  Eigen::Matrix<double, Dim, Dim> m2 = Eigen::Matrix<double, Dim, Dim>::Zero();

  void add(const Eigen::Matrix<double, Dim, 1>& x) {
    ++count;
    const Eigen::Matrix<double, Dim, 1> delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean).transpose();
  }
  Eigen::Matrix<double, Dim, Dim> covariance() const {
    if (count < 2) return Eigen::Matrix<double, Dim, Dim>::Zero();
    return (m2 + m2.transpose()) / (2.0 * static_cast<double>(count - 1));
  }
  Eigen::Matrix<double, Dim, 1> standard_error() const {
    if (count < 2) return Eigen::Matrix<double, Dim, 1>::Zero();
    return (covariance().diagonal() / static_cast<double>(count)).cwiseSqrt();
  }
};

/// Counts of |band_value| beyond 1, 2, 3 at one test point.
struct Coverage {
  Point2 point = Point2::Zero();
  std::size_t evaluated = 0;
  std::size_t beyond[3] = {0, 0, 0};
};

struct EnsembleSummary {
  std::size_t trials = 0;
  std::size_t failed = 0;
  RunningMoments<kConicDim> g0;
  RunningMoments<1> sigma2;
  RunningMoments<2> center;            // as computed, elliptical fits only
  RunningMoments<2> center_corrected;  // bias subtracted
  std::size_t center_failed = 0;
  std::vector<Coverage> coverage;
  std::size_t class_counts[4] = {0, 0, 0, 0};  // indexed by ConicClass
};

struct TrialEnsemble {
  std::vector<TrialRecord> trials;
  EnsembleSummary summary;
};

struct EnsembleRequest {
  CurveSpec curve;
  NoiseSpec noise;
  int n_points = 20;
  int n_trials = 1;
  PipelineOptions options;
  std::vector<Point2> test_points;  // band coverage is tallied here
  int threads = 0;                  // 0: CONIC_THREADS, else hardware
};

/// Thread count from CONIC_THREADS (0 or unset: hardware concurrency).
int resolve_threads(int requested = 0);

/// Trials run in parallel; each trial's noise is keyed by its index and the
/// summary is reduced in trial order, so results do not depend on threads.
TrialEnsemble run_ensemble(const EnsembleRequest& request);

}  // namespace conicfit
