#include "app/report.hpp"

#include "app/points_io.hpp"

#include <cmath>
#include <sstream>

namespace conicfit::report {

namespace {

using Json = nlohmann::ordered_json;

template <typename Derived>
Json vector_json(const Eigen::MatrixBase<Derived>& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

template <typename Derived>
Json matrix_json(const Eigen::MatrixBase<Derived>& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
  return out;
}

void require_finite(const Json& j, const std::string& path) {
  if (j.is_number_float() && !std::isfinite(j.get<double>()))
    fail_numerical("non-finite value in report field " + path);
  if (j.is_object())
    for (const auto& [k, v] : j.items()) require_finite(v, path.empty() ? k : path + "." + k);
  if (j.is_array())
    for (std::size_t i = 0; i < j.size(); ++i) require_finite(j[i], path + "[" + std::to_string(i) + "]");
}

void flatten(const Json& j, const std::string& path, std::ostringstream& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, path.empty() ? k : path + "." + k, out);
  } else if (j.is_array()) {
    if (j.empty()) out << io::csv_escape(path) << ",\n";
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], path + "[" + std::to_string(i) + "]", out);
  } else if (j.is_number_float()) {
    out << io::csv_escape(path) << ',' << io::format_double(j.get<double>()) << '\n';
  } else if (j.is_string()) {
    out << io::csv_escape(path) << ',' << io::csv_escape(j.get<std::string>()) << '\n';
  } else if (j.is_null()) {
    out << io::csv_escape(path) << ",\n";
  } else {
    out << io::csv_escape(path) << ',' << j.dump() << '\n';
  }
}

}  // namespace

std::optional<ConicClass> parse_type(std::string_view name) {
  if (name == "ellipse") return ConicClass::Ellipse;
  if (name == "hyperbola") return ConicClass::Hyperbola;
  if (name == "parabola") return ConicClass::Parabola;
  return std::nullopt;
}

FitReport make_fit_report(std::span<const Point2> points, const FitRequest& request) {
  if (points.size() < 6) fail_input("need at least 6 points, got " + std::to_string(points.size()));
  if (request.type_target == ConicClass::Degenerate) fail_config("type target must be ellipse, hyperbola or parabola");

  FitReport r;
  r.request = request;
  if (request.reweight == Reweight::None) {
    r.fit = generic_fit(points, Weighting::Unweighted, {}, request.curvature_correction);
  } else {
    const Weighting mode = request.reweight == Reweight::Sampson ? Weighting::Sampson : Weighting::Optimal;
    ReweightedFit rw = fit_with_reweight(points, mode, request.curvature_correction);
    r.fit = std::move(rw.final);
    r.reweight_fallback = rw.fallback;
    r.warnings = std::move(rw.warnings);
  }
  r.conic_class = classify(r.fit.g0);

  if (request.type_target) {
    r.parabolic = project_to_parabola(r.fit);
    if (*request.type_target != ConicClass::Parabola)
      r.truncated = type_constrained_mean(r.fit, *r.parabolic, *request.type_target);
  }
  if (r.conic_class == ConicClass::Ellipse || r.conic_class == ConicClass::Hyperbola) {
    try {
      r.center = center_with_errors(r.fit);
    } catch (const FitError& e) {
      r.warnings.push_back(std::string("centre not reported: ") + e.what());
    }
  }
  return r;
}

Json to_json(const FitReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["n_points"] = r.fit.n_points;
  j["options"] = {
      {"reweight", std::string(to_string(r.request.reweight))},
      {"curvature_correction", r.request.curvature_correction},
      {"type", r.request.type_target ? Json(std::string(to_string(*r.request.type_target))) : Json()},
  };
  j["coefficients"] = {{"corrected", vector_json(r.fit.g0)}, {"raw", vector_json(r.fit.g0_raw)}};
  j["eigenvalues"] = vector_json(r.fit.lambdas);
  j["sigma2_hat"] = r.fit.sigma2_hat;
  j["covariance"] = matrix_json(r.fit.v0);
  j["classification"] = std::string(to_string(r.conic_class));

  if (r.parabolic) {
    Json t;
    t["target"] = std::string(to_string(*r.request.type_target));
    t["parabola"] = vector_json(r.parabolic->g_bar);
    t["parabola_covariance"] = matrix_json(r.parabolic->v_bar);
    t["iterations"] = r.parabolic->iterations;
    t["parabola_residual"] = r.parabolic->residual;
    if (r.truncated) {
      t["x0"] = r.truncated->x0;
      t["mean"] = vector_json(r.truncated->mean);
      t["mean_classification"] = std::string(to_string(classify(r.truncated->mean)));
      t["boundary_case"] = r.truncated->boundary_case;
    } else {
      t["x0"] = Json();
      t["mean"] = vector_json(r.parabolic->g_bar);
      t["mean_classification"] = std::string(to_string(ConicClass::Parabola));
      t["boundary_case"] = false;
    }
    j["typed_fit"] = t;
  } else {
    j["typed_fit"] = Json();
  }

  if (r.center) {
    j["center"] = {
        {"c", vector_json(r.center->c)},
        {"bias", vector_json(r.center->bias)},
        {"corrected", vector_json(r.center->corrected())},
        {"covariance", matrix_json(r.center->covariance)},
    };
  } else {
    j["center"] = Json();
  }

  j["diagnostics"] = {
      {"weighting", std::string(to_string(r.fit.weighting))},
      {"reweight_fallback", r.reweight_fallback},
      {"warnings", r.warnings},
  };
  require_finite(j, "");
  return j;
}

std::string to_csv(const FitReport& r) {
  std::ostringstream out;
  out << "field,value\n";
  flatten(to_json(r), "", out);
  return out.str();
}

}  // namespace conicfit::report
