#pragma once

#include "app/svg.hpp"
#include "conicfit/synth_mc.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace conicfit::experiment {

inline constexpr int kSchemaVersion = 1;

/// One pipeline variant run on the shared noisy samples.
struct Panel {
  std::string label;
  PipelineOptions options;
};

struct Outputs {
  std::string directory = ".";
  bool trials_csv = true;
  bool svg = true;
  int plot_fits = 50;  // fitted curves drawn per panel
  int grid = 400;      // band field lattice, cells per side
  int width_px = 800;
  std::optional<svg::Box> box;  // default: the sampled arc, padded
};

struct ExperimentConfig {
  std::string name;
  CurveSpec curve;
  NoiseSpec noise;
  int n_points = 20;
  int n_trials = 50;
  int n_test_points = 50;  // on-curve points where band coverage is tallied
  std::vector<Panel> panels;
  Outputs outputs;

  void validate() const;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Strict: unknown keys and wrong types are config errors naming the key.
ExperimentConfig parse_config(const nlohmann::ordered_json& j);
ExperimentConfig read_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ExperimentConfig& c);

/// Test points the coverage counters use.
std::vector<Point2> test_points(const ExperimentConfig& c);

struct PanelResult {
  std::string label;
  TrialEnsemble ensemble;
  std::vector<double> predicted_half_width;  // per test point
};

struct ExperimentResult {
  std::vector<PanelResult> panels;
  std::vector<std::filesystem::path> written;
};

/// Runs every panel and writes <name>_<label>_summary.csv, _trials.csv, .svg
/// and (with centres) _centers.svg under the output directory, which
/// `out_dir` overrides when non-empty. On failure nothing is left behind.
ExperimentResult run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir = {});

std::string summary_csv(const ExperimentConfig& c, const PanelResult& r);
std::string trials_csv(const PanelResult& r);
std::string panel_svg(const ExperimentConfig& c, const PanelResult& r);
std::string centers_svg(const ExperimentConfig& c, const PanelResult& r);

}  // namespace conicfit::experiment
