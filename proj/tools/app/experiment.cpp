#include "app/experiment.hpp"

#include "app/points_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace conicfit::experiment {

namespace {

using Json = nlohmann::ordered_json;

// --- strict JSON reading -----------------------------------------------------

void allow_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail_config(where + ": expected an object");
  for (const auto& [k, v] : obj.items())
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      fail_config(where + ": unknown key \"" + k + "\"");
}

const Json* find(const Json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const Json& need(const Json& obj, const std::string& where, const char* key) {
  const Json* v = find(obj, key);
  if (!v) fail_config(where + ": missing \"" + key + "\"");
  return *v;
}

double number(const Json& v, const std::string& where) {
  if (!v.is_number()) fail_config(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail_config(where + ": expected a finite number");
  return d;
}

int integer(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) fail_config(where + ": expected an integer");
  const auto i = v.get<std::int64_t>();
  if (i < INT32_MIN || i > INT32_MAX) fail_config(where + ": out of range");
  return static_cast<int>(i);
}

bool boolean(const Json& v, const std::string& where) {
  if (!v.is_boolean()) fail_config(where + ": expected true or false");
  return v.get<bool>();
}

std::string string(const Json& v, const std::string& where) {
  if (!v.is_string()) fail_config(where + ": expected a string");
  return v.get<std::string>();
}

Point2 pair(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) fail_config(where + ": expected [x, y]");
  return {number(v[0], where + "[0]"), number(v[1], where + "[1]")};
}

template <typename T, typename F>
void optional_field(const Json& obj, const std::string& where, const char* key, T& out, F read) {
  if (const Json* v = find(obj, key)) out = read(*v, where + "." + key);
}

bool safe_label(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

Reweight parse_reweight(const std::string& s, const std::string& where) {
  if (s == "none") return Reweight::None;
  if (s == "optimal") return Reweight::Optimal;
  if (s == "sampson") return Reweight::Sampson;
  fail_config(where + ": reweight must be none, optimal or sampson");
}

std::optional<ConicClass> parse_target(const std::string& s, const std::string& where) {
  if (s == "none") return std::nullopt;
  if (s == "ellipse") return ConicClass::Ellipse;
  if (s == "hyperbola") return ConicClass::Hyperbola;
  if (s == "parabola") return ConicClass::Parabola;
  fail_config(where + ": type must be none, ellipse, hyperbola or parabola");
}

CurveSpec parse_curve(const Json& j) {
  const std::string w = "curve";
  allow_keys(j, w, {"kind", "a", "b", "focal_length", "range", "spacing", "rotation", "translation"});
  CurveSpec c;
  const std::string kind = string(need(j, w, "kind"), w + ".kind");
  if (kind == "ellipse") {
    if (find(j, "focal_length")) fail_config(w + ": focal_length belongs to a parabola");
    c.shape = EllipseShape{number(need(j, w, "a"), w + ".a"), number(need(j, w, "b"), w + ".b")};
  } else if (kind == "parabola") {
    if (find(j, "a") || find(j, "b")) fail_config(w + ": a and b belong to an ellipse");
    c.shape = ParabolaShape{number(need(j, w, "focal_length"), w + ".focal_length")};
  } else {
    fail_config(w + ".kind: expected ellipse or parabola");
  }
  const Point2 range = pair(need(j, w, "range"), w + ".range");
  c.t_begin = range.x();
  c.t_end = range.y();
  if (const Json* s = find(j, "spacing")) {
    const std::string sp = string(*s, w + ".spacing");
    if (sp == "parameter") c.spacing = Spacing::Parameter;
    else if (sp == "arc_length") c.spacing = Spacing::ArcLength;
    else fail_config(w + ".spacing: expected parameter or arc_length");
  }
  optional_field(j, w, "rotation", c.pose.rotation, number);
  optional_field(j, w, "translation", c.pose.translation, pair);
  return c;
}

Panel parse_panel(const Json& j, const std::string& w) {
  allow_keys(j, w, {"label", "reweight", "curvature_correction", "type", "center"});
  Panel p;
  p.label = string(need(j, w, "label"), w + ".label");
  if (const Json* v = find(j, "reweight")) p.options.reweight = parse_reweight(string(*v, w + ".reweight"), w);
  optional_field(j, w, "curvature_correction", p.options.curvature_correction, boolean);
  if (const Json* v = find(j, "type")) p.options.type_target = parse_target(string(*v, w + ".type"), w);
  optional_field(j, w, "center", p.options.center, boolean);
  return p;
}

Outputs parse_outputs(const Json& j) {
  const std::string w = "outputs";
  allow_keys(j, w, {"directory", "trials_csv", "svg", "plot_fits", "grid", "width_px", "box"});
  Outputs o;
  optional_field(j, w, "directory", o.directory, string);
  optional_field(j, w, "trials_csv", o.trials_csv, boolean);
  optional_field(j, w, "svg", o.svg, boolean);
  optional_field(j, w, "plot_fits", o.plot_fits, integer);
  optional_field(j, w, "grid", o.grid, integer);
  optional_field(j, w, "width_px", o.width_px, integer);
  if (const Json* b = find(j, "box")) {
    if (!b->is_array() || b->size() != 4) fail_config(w + ".box: expected [xmin, ymin, xmax, ymax]");
    o.box = svg::Box{number((*b)[0], w + ".box"), number((*b)[1], w + ".box"), number((*b)[2], w + ".box"),
                     number((*b)[3], w + ".box")};
  }
  return o;
}

// --- outputs ------------------------------------------------------------------

Weighting weighting_of(Reweight r) {
  switch (r) {
    case Reweight::None: return Weighting::Unweighted;
    case Reweight::Optimal: return Weighting::Optimal;
    case Reweight::Sampson: return Weighting::Sampson;
  }
  return Weighting::Unweighted;
}

/// The estimate a panel is about: the typed mean when there is one.
const ConicVector& plotted_conic(const TrialRecord& rec) {
  if (rec.truncated) return rec.truncated->mean;
  if (rec.parabolic) return rec.parabolic->g_bar;
  return rec.fit.g0;
}

svg::Box plot_box(const ExperimentConfig& c) {
  if (c.outputs.box) return *c.outputs.box;
  CurveSpec dense = c.curve;
  dense.spacing = Spacing::Parameter;
  const auto pts = sample_curve(dense, 257);
  return svg::Box::around(pts).padded(0.08);
}

std::vector<Point2> true_curve(const ExperimentConfig& c) {
  CurveSpec dense = c.curve;
  dense.spacing = Spacing::Parameter;
  return sample_curve(dense, 1025);
}

std::string g(double v) { return io::format_double(v); }

void write_file(const std::filesystem::path& path, const std::string& text,
                std::vector<std::filesystem::path>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_config("cannot write " + path.string());
  written.push_back(path);
  out << text;
  out.close();
  if (!out) fail_config("error writing " + path.string());
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!safe_label(name)) fail_config("name must be a non-empty string of letters, digits, '_' or '-'");
  curve.validate();
  if (!(noise.sigma >= 0) || !std::isfinite(noise.sigma)) fail_config("noise.sigma must be finite and >= 0");
  if (n_points < 6) fail_config("n_points must be >= 6");
  if (n_trials < 1) fail_config("n_trials must be >= 1");
  if (n_test_points < 0) fail_config("n_test_points must be >= 0");
  if (n_test_points == 1) fail_config("n_test_points must be 0 or >= 2");
  if (panels.empty()) fail_config("at least one panel is required");
  std::set<std::string> labels;
  for (const Panel& p : panels) {
    if (!safe_label(p.label)) fail_config("panel label \"" + p.label + "\" must use letters, digits, '_' or '-'");
    if (!labels.insert(p.label).second) fail_config("duplicate panel label \"" + p.label + "\"");
    if (p.options.type_target == ConicClass::Degenerate) fail_config("invalid type target");
  }
  if (outputs.directory.empty()) fail_config("outputs.directory must not be empty");
  if (outputs.plot_fits < 0) fail_config("outputs.plot_fits must be >= 0");
  if (outputs.grid < 2 || outputs.grid > 4000) fail_config("outputs.grid must lie in [2, 4000]");
  if (outputs.width_px < 16 || outputs.width_px > 10000) fail_config("outputs.width_px must lie in [16, 10000]");
  if (outputs.box && !(outputs.box->width() > 0 && outputs.box->height() > 0))
    fail_config("outputs.box must have xmin < xmax and ymin < ymax");
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto same_curve = [](const CurveSpec& x, const CurveSpec& y) {
    if (x.is_ellipse() != y.is_ellipse()) return false;
    if (x.is_ellipse()) {
      const auto &ex = std::get<EllipseShape>(x.shape), &ey = std::get<EllipseShape>(y.shape);
      if (ex.a != ey.a || ex.b != ey.b) return false;
    } else if (std::get<ParabolaShape>(x.shape).focal_length != std::get<ParabolaShape>(y.shape).focal_length) {
      return false;
    }
    return x.t_begin == y.t_begin && x.t_end == y.t_end && x.spacing == y.spacing &&
           x.pose.rotation == y.pose.rotation && x.pose.translation == y.pose.translation;
  };
  auto same_panel = [](const Panel& x, const Panel& y) {
    return x.label == y.label && x.options.reweight == y.options.reweight &&
           x.options.curvature_correction == y.options.curvature_correction &&
           x.options.type_target == y.options.type_target && x.options.center == y.options.center &&
           x.options.keep_points == y.options.keep_points;
  };
  auto same_box = [](const std::optional<svg::Box>& x, const std::optional<svg::Box>& y) {
    if (x.has_value() != y.has_value()) return false;
    return !x || (x->xmin == y->xmin && x->ymin == y->ymin && x->xmax == y->xmax && x->ymax == y->ymax);
  };
  return a.name == b.name && same_curve(a.curve, b.curve) && a.noise.sigma == b.noise.sigma &&
         a.noise.seed == b.noise.seed && a.n_points == b.n_points && a.n_trials == b.n_trials &&
         a.n_test_points == b.n_test_points && a.panels.size() == b.panels.size() &&
         std::equal(a.panels.begin(), a.panels.end(), b.panels.begin(), same_panel) &&
         a.outputs.directory == b.outputs.directory && a.outputs.trials_csv == b.outputs.trials_csv &&
         a.outputs.svg == b.outputs.svg && a.outputs.plot_fits == b.outputs.plot_fits &&
         a.outputs.grid == b.outputs.grid && a.outputs.width_px == b.outputs.width_px &&
         same_box(a.outputs.box, b.outputs.box);
}

ExperimentConfig parse_config(const Json& j) {
  allow_keys(j, "config", {"schema_version", "name", "curve", "noise", "n_points", "n_trials", "n_test_points",
                           "panels", "outputs"});
  if (const Json* v = find(j, "schema_version"))
    if (integer(*v, "schema_version") != kSchemaVersion)
      fail_config("schema_version " + v->dump() + " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
  ExperimentConfig c;
  c.name = string(need(j, "config", "name"), "name");
  c.curve = parse_curve(need(j, "config", "curve"));
  const Json& noise = need(j, "config", "noise");
  allow_keys(noise, "noise", {"sigma", "seed"});
  c.noise.sigma = number(need(noise, "noise", "sigma"), "noise.sigma");
  if (const Json* seed = find(noise, "seed")) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<std::int64_t>() >= 0))
      fail_config("noise.seed: expected a non-negative integer");
    c.noise.seed = seed->get<std::uint64_t>();
  }
  optional_field(j, "config", "n_points", c.n_points, integer);
  optional_field(j, "config", "n_trials", c.n_trials, integer);
  optional_field(j, "config", "n_test_points", c.n_test_points, integer);
  const Json& panels = need(j, "config", "panels");
  if (!panels.is_array()) fail_config("panels: expected an array");
  for (std::size_t i = 0; i < panels.size(); ++i)
    c.panels.push_back(parse_panel(panels[i], "panels[" + std::to_string(i) + "]"));
  if (const Json* o = find(j, "outputs")) c.outputs = parse_outputs(*o);
  c.validate();
  return c;
}

ExperimentConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_config("cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail_config(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = c.name;
  Json curve;
  if (c.curve.is_ellipse()) {
    const auto& e = std::get<EllipseShape>(c.curve.shape);
    curve["kind"] = "ellipse";
    curve["a"] = e.a;
    curve["b"] = e.b;
  } else {
    curve["kind"] = "parabola";
    curve["focal_length"] = std::get<ParabolaShape>(c.curve.shape).focal_length;
  }
  curve["range"] = {c.curve.t_begin, c.curve.t_end};
  curve["spacing"] = c.curve.spacing == Spacing::Parameter ? "parameter" : "arc_length";
  curve["rotation"] = c.curve.pose.rotation;
  curve["translation"] = {c.curve.pose.translation.x(), c.curve.pose.translation.y()};
  j["curve"] = curve;
  j["noise"] = {{"sigma", c.noise.sigma}, {"seed", c.noise.seed}};
  j["n_points"] = c.n_points;
  j["n_trials"] = c.n_trials;
  j["n_test_points"] = c.n_test_points;
  j["panels"] = Json::array();
  for (const Panel& p : c.panels) {
    j["panels"].push_back({
        {"label", p.label},
        {"reweight", std::string(to_string(p.options.reweight))},
        {"curvature_correction", p.options.curvature_correction},
        {"type", p.options.type_target ? std::string(to_string(*p.options.type_target)) : "none"},
        {"center", p.options.center},
    });
  }
  Json o;
  o["directory"] = c.outputs.directory;
  o["trials_csv"] = c.outputs.trials_csv;
  o["svg"] = c.outputs.svg;
  o["plot_fits"] = c.outputs.plot_fits;
  o["grid"] = c.outputs.grid;
  o["width_px"] = c.outputs.width_px;
  if (c.outputs.box) o["box"] = {c.outputs.box->xmin, c.outputs.box->ymin, c.outputs.box->xmax, c.outputs.box->ymax};
  j["outputs"] = o;
  return j;
}

std::vector<Point2> test_points(const ExperimentConfig& c) {
  if (c.n_test_points == 0) return {};
  return sample_curve(c.curve, c.n_test_points);
}

std::string summary_csv(const ExperimentConfig& c, const PanelResult& r) {
  const EnsembleSummary& s = r.ensemble.summary;
  std::ostringstream out;
  out << "panel,statistic,index,value\n";
  auto row = [&](const std::string& stat, long index, const std::string& value) {
    out << r.label << ',' << stat << ',' << (index < 0 ? "" : std::to_string(index)) << ',' << value << '\n';
  };
  row("trials", -1, std::to_string(s.trials));
  row("failed", -1, std::to_string(s.failed));
  for (int k = 0; k < 4; ++k)
    row(std::string("class_") + std::string(to_string(static_cast<ConicClass>(k))), -1,
        std::to_string(s.class_counts[k]));
  row("sigma_true", -1, g(c.noise.sigma));
  if (s.sigma2.count > 0) {
    row("sigma2_hat_mean", -1, g(s.sigma2.mean(0)));
    row("sigma2_hat_se", -1, g(s.sigma2.standard_error()(0)));
  }
  for (std::size_t i = 0; i < s.coverage.size(); ++i) {
    const Coverage& cov = s.coverage[i];
    const long idx = static_cast<long>(i);
    row("test_x", idx, g(cov.point.x()));
    row("test_y", idx, g(cov.point.y()));
    row("evaluated", idx, std::to_string(cov.evaluated));
    for (int k = 0; k < 3; ++k)
      row("fraction_beyond_" + std::to_string(k + 1), idx,
          cov.evaluated ? g(static_cast<double>(cov.beyond[k]) / cov.evaluated) : "");
    row("band_half_width_predicted", idx, g(r.predicted_half_width[i]));
  }
  if (s.center.count + s.center_failed > 0) {
    if (c.curve.is_ellipse()) {
      row("center_true_x", -1, g(c.curve.pose.translation.x()));
      row("center_true_y", -1, g(c.curve.pose.translation.y()));
    }
    row("center_count", -1, std::to_string(s.center.count));
    row("center_failed", -1, std::to_string(s.center_failed));
    const char* axis[2] = {"x", "y"};
    for (int k = 0; k < 2 && s.center.count > 0; ++k) {
      row(std::string("center_mean_") + axis[k], -1, g(s.center.mean(k)));
      row(std::string("center_se_") + axis[k], -1, g(s.center.standard_error()(k)));
      row(std::string("center_corrected_mean_") + axis[k], -1, g(s.center_corrected.mean(k)));
      row(std::string("center_corrected_se_") + axis[k], -1, g(s.center_corrected.standard_error()(k)));
    }
  }
  return out.str();
}

std::string trials_csv(const PanelResult& r) {
  std::ostringstream out;
  out << "trial,ok,error,class,sigma2_hat";
  for (int k = 0; k < kConicDim; ++k) out << ",g" << k;
  out << ",typed_class,x0";
  for (int k = 0; k < kConicDim; ++k) out << ",typed" << k;
  out << ",center_x,center_y,bias_x,bias_y\n";
  for (std::size_t t = 0; t < r.ensemble.trials.size(); ++t) {
    const TrialRecord& rec = r.ensemble.trials[t];
    out << t << ',' << (rec.ok ? 1 : 0) << ',' << io::csv_escape(rec.error) << ',';
    if (!rec.ok) {
      out << std::string(3 + 2 * kConicDim + 4, ',') << '\n';
      continue;
    }
    out << to_string(rec.conic_class) << ',' << g(rec.fit.sigma2_hat);
    for (int k = 0; k < kConicDim; ++k) out << ',' << g(rec.fit.g0(k));
    if (rec.parabolic) {
      const ConicVector& typed = plotted_conic(rec);
      out << ',' << to_string(classify(typed)) << ',' << (rec.truncated ? g(rec.truncated->x0) : "");
      for (int k = 0; k < kConicDim; ++k) out << ',' << g(typed(k));
    } else {
      out << std::string(2 + kConicDim, ',');
    }
    if (rec.center) {
      out << ',' << g(rec.center->c.x()) << ',' << g(rec.center->c.y()) << ',' << g(rec.center->bias.x()) << ','
          << g(rec.center->bias.y());
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
  return out.str();
}

std::string panel_svg(const ExperimentConfig& c, const PanelResult& r) {
  const svg::Box box = plot_box(c);
  svg::Canvas canvas(box, c.outputs.width_px);
  const auto& trials = r.ensemble.trials;
  const auto first_ok = std::find_if(trials.begin(), trials.end(), [](const TrialRecord& t) { return t.ok; });
  const int n = c.outputs.grid;

  if (first_ok != trials.end()) {
    // Posterior band of one trial, shaded at 3, 2 and 1 sigma.
    const BandField field{first_ok->fit.g0, first_ok->fit.v0};
    const svg::Grid band = svg::Grid::sample(box, n, n, [&](const Point2& p) { return band_value(field, p); });
    const char* shade[3] = {"#c6dbef", "#9ecae1", "#6baed6"};
    for (int level = 3; level >= 1; --level) canvas.fill_below(band, level, shade[level - 1], 0.6);
    for (int level = 1; level <= 3; ++level)
      for (double sign : {-1.0, 1.0}) canvas.segments(svg::contour(band, sign * level), "#4292c6", 0.5);
  }

  int drawn = 0;
  for (const TrialRecord& rec : trials) {
    if (drawn >= c.outputs.plot_fits) break;
    if (!rec.ok) continue;
    const ConicVector& gv = plotted_conic(rec);
    const svg::Grid z = svg::Grid::sample(box, n, n, [&](const Point2& p) { return conic_value(gv, p); });
    canvas.segments(svg::contour(z, 0.0), "#08519c", 0.4);
    ++drawn;
  }

  const auto curve = true_curve(c);
  canvas.polyline(curve, "#000000", 1.5);
  if (first_ok != trials.end()) {
    const std::vector<Point2> base = sample_curve(c.curve, c.n_points);
    const auto index = static_cast<std::uint64_t>(first_ok - trials.begin());
    canvas.dots(add_noise(base, c.noise, index), "#cb181d", 2.0);
  }
  canvas.frame();
  canvas.text(8, 18, c.name + " / " + r.label);
  return canvas.str();
}

std::string centers_svg(const ExperimentConfig& c, const PanelResult& r) {
  std::vector<Point2> raw, corrected;
  for (const TrialRecord& rec : r.ensemble.trials) {
    if (!rec.ok || !rec.center || rec.conic_class != ConicClass::Ellipse) continue;
    raw.push_back(rec.center->c);
    corrected.push_back(rec.center->corrected());
  }
  const Point2 truth = c.curve.pose.translation;
  // Central 98% of each cloud so stray centres do not set the scale.
  std::vector<Point2> extent{truth};
  for (const auto* cloud : {&raw, &corrected}) {
    if (cloud->empty()) continue;
    std::vector<double> xs, ys;
    for (const Point2& p : *cloud) xs.push_back(p.x()), ys.push_back(p.y());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    const std::size_t lo = xs.size() / 100, hi = xs.size() - 1 - xs.size() / 100;
    extent.emplace_back(xs[lo], ys[lo]);
    extent.emplace_back(xs[hi], ys[hi]);
  }
  const svg::Box box = svg::Box::around(extent).padded(0.1);
  svg::Canvas canvas(box, std::min(c.outputs.width_px, 600));
  canvas.dots(raw, "#2171b5", 1.5);
  canvas.dots(corrected, "#e6550d", 1.5);
  canvas.cross(truth, "#000000", 8);
  canvas.frame();
  canvas.text(8, 18, c.name + " / " + r.label + ": centres (blue raw, orange corrected)");
  return canvas.str();
}

ExperimentResult run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
  c.validate();
  ExperimentResult result;
  const std::vector<Point2> tests = test_points(c);
  for (const Panel& panel : c.panels) {
    EnsembleRequest req;
    req.curve = c.curve;
    req.noise = c.noise;
    req.n_points = c.n_points;
    req.n_trials = c.n_trials;
    req.options = panel.options;
    req.test_points = tests;
    PanelResult pr{panel.label, run_ensemble(req), {}};
    if (!tests.empty()) {
      ConicVector fitted;
      const SymMatrix6 v = predicted_covariance(sample_curve(c.curve, c.n_points), c.noise.sigma,
                                                weighting_of(panel.options.reweight), &fitted);
      for (const Point2& p : tests) pr.predicted_half_width.push_back(band_half_width(BandField{fitted, v}, p));
    }
    result.panels.push_back(std::move(pr));
  }

  const std::filesystem::path dir = out_dir.empty() ? std::filesystem::path(c.outputs.directory) : out_dir;
  std::vector<std::filesystem::path>& written = result.written;
  try {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail_config("cannot create " + dir.string() + ": " + ec.message());
    for (const PanelResult& pr : result.panels) {
      const std::string stem = c.name + "_" + pr.label;
      write_file(dir / (stem + "_summary.csv"), summary_csv(c, pr), written);
      if (c.outputs.trials_csv) write_file(dir / (stem + "_trials.csv"), trials_csv(pr), written);
      if (c.outputs.svg) {
        write_file(dir / (stem + ".svg"), panel_svg(c, pr), written);
        const bool centres = std::any_of(c.panels.begin(), c.panels.end(), [&](const Panel& p) {
          return p.label == pr.label && p.options.center;
        });
        if (centres && c.curve.is_ellipse()) write_file(dir / (stem + "_centers.svg"), centers_svg(c, pr), written);
      }
    }
  } catch (...) {
    for (const auto& p : written) {
      std::error_code ignored;
      std::filesystem::remove(p, ignored);
    }
    written.clear();
    throw;
  }
  return result;
}

}  // namespace conicfit::experiment
