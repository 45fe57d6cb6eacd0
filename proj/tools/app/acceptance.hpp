#pragma once

#include "conicfit/synth_mc.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace conicfit::acceptance {

/// Perturbs the parabolic estimate along random directions tangent to the
/// constraint surface and checks that none lowers the Mahalanobis objective.
struct ProbeResult {
  int directions = 0;
  int failures = 0;
  double worst_relative_gain = 0;  // min over directions of (f(G) - f(G_bar)) / f(G_bar)
};

ProbeResult minimality_probe(const GenericFit& fit, const ParabolicFit& pf, int directions,
                             std::uint64_t seed);

/// Signed distance along the unit normal n from p to the nearest crossing of
/// the conic g (positive in the direction of n). Throws when the normal line
/// misses the curve.
double signed_normal_offset(const ConicVector& g, const Point2& p, const Point2& n);

/// Adaptive-Simpson mean of a unit Gaussian truncated to [x0, inf).
double quadrature_truncated_mean(double x0);

struct SuiteOptions {
  bool fast = false;  // the selftest subset: reduced trial counts
  bool curvature_correction = true;  // false only as a negative control
  int threads = 0;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // deterministic; timings are kept out of it
  double seconds = 0;
};

std::vector<int> criterion_ids(bool fast);

CriterionResult run_criterion(int id, const SuiteOptions& options);

std::vector<CriterionResult> run_suite(const SuiteOptions& options);

/// One "PASS|FAIL [id] name: detail" line per criterion.
std::string format_report(const std::vector<CriterionResult>& results, bool with_timing);

}  // namespace conicfit::acceptance
