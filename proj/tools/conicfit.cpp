#include "app/acceptance.hpp"
#include "app/experiment.hpp"
#include "app/points_io.hpp"
#include "app/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace conicfit;

namespace {

// Exit codes: 1 input, 2 numerical, 3 config (including bad command lines),
// 4 selftest checks failed.
constexpr int kSelftestFailed = 4;

int cmd_fit(const std::string& file, bool no_reweight, bool sampson, bool no_correction, const std::string& type,
            const std::string& format, const std::string& output) {
  report::FitRequest req;
  req.reweight = no_reweight ? Reweight::None : sampson ? Reweight::Sampson : Reweight::Optimal;
  req.curvature_correction = !no_correction;
  if (!type.empty()) req.type_target = report::parse_type(type);

  std::vector<Point2> points;
  if (file == "-") {
    points = io::parse_points(std::cin, "<stdin>");
  } else {
    points = io::read_points(file);
  }
  const report::FitReport r = report::make_fit_report(points, req);
  const std::string text = format == "csv" ? report::to_csv(r) : report::to_json(r).dump(2) + "\n";
  if (output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(output, std::ios::binary);
    if (!(out << text)) fail_config("cannot write " + output);
  }
  return 0;
}

int cmd_experiment(const std::string& file, const std::string& out_dir) {
  const experiment::ExperimentConfig config = experiment::read_config(file);
  const experiment::ExperimentResult result = experiment::run_experiment(config, out_dir);
  for (const auto& panel : result.panels) {
    const EnsembleSummary& s = panel.ensemble.summary;
    std::cout << config.name << '/' << panel.label << ": " << s.trials << " trials, " << s.failed << " failed\n";
  }
  for (const auto& path : result.written) std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_selftest(bool disable_correction, bool timing) {
  acceptance::SuiteOptions options;
  options.fast = true;
  options.curvature_correction = !disable_correction;
  const auto results = acceptance::run_suite(options);
  std::cout << acceptance::format_report(results, timing);
  std::size_t passed = 0;
  for (const auto& r : results) passed += r.pass;
  std::cout << "selftest: " << passed << "/" << results.size() << " passed\n";
  return passed == results.size() ? 0 : kSelftestFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conic fitting with posterior covariance, bias correction and type constraints"};
  app.require_subcommand(1);

  std::string fit_file, type, format = "json", output;
  bool no_reweight = false, sampson = false, no_correction = false;
  auto* fit = app.add_subcommand("fit", "Fit a conic to a CSV file of x,y points ('-' reads stdin)");
  fit->add_option("file", fit_file, "Point file")->required();
  auto* nr = fit->add_flag("--no-reweight", no_reweight, "Single unweighted fit");
  fit->add_flag("--sampson", sampson, "Reweight with gradients at the measured points")->excludes(nr);
  fit->add_flag("--no-curvature-correction", no_correction, "Skip the curvature bias correction");
  fit->add_option("--type", type, "Constrain the conic type")
      ->check(CLI::IsMember({"ellipse", "hyperbola", "parabola"}));
  fit->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  fit->add_option("-o,--output", output, "Write the report here instead of stdout");

  std::string config_file, out_dir;
  auto* exp = app.add_subcommand("experiment", "Run a Monte Carlo experiment described by a JSON config");
  exp->add_option("config", config_file, "Experiment config")->required();
  exp->add_option("--out", out_dir, "Output directory (overrides the config)");

  bool disable_correction = false, timing = false;
  auto* self = app.add_subcommand("selftest", "Run the fast acceptance checks");
  self->add_flag("--timing", timing, "Append per-check wall time");
  // Negative control: the bias checks must fail with this set.
  self->add_flag("--disable-curvature-correction", disable_correction)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::Config);
  }

  try {
    if (*fit) return cmd_fit(fit_file, no_reweight, sampson, no_correction, type, format, output);
    if (*exp) return cmd_experiment(config_file, out_dir);
    if (*self) return cmd_selftest(disable_correction, timing);
  } catch (const FitError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Numerical);
  }
  return 0;
}
