#pragma once

#include "conicfit/synth_mc.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace conicfit::report {

inline constexpr int kSchemaVersion = 1;

struct FitRequest {
  Reweight reweight = Reweight::Optimal;
  bool curvature_correction = true;
  std::optional<ConicClass> type_target;  // ellipse, hyperbola or parabola
};

/// Everything the fit command reports. Unlike run_pipeline, errors propagate
/// as FitError so the caller can map them to exit codes.
struct FitReport {
  FitRequest request;
  GenericFit fit;
  ConicClass conic_class = ConicClass::Degenerate;
  bool reweight_fallback = false;
  std::optional<ParabolicFit> parabolic;
  std::optional<TruncatedPosterior> truncated;
  std::optional<CenterEstimate> center;
  std::vector<std::string> warnings;
};

FitReport make_fit_report(std::span<const Point2> points, const FitRequest& request);

/// Throws a numerical FitError naming the first non-finite field.
nlohmann::ordered_json to_json(const FitReport& r);

/// Two columns, field and value; vectors and matrices are flattened with
/// [i] / [i][j] suffixes in the same order as the JSON.
std::string to_csv(const FitReport& r);

std::optional<ConicClass> parse_type(std::string_view name);

}  // namespace conicfit::report
