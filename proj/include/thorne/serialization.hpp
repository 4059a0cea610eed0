// JSON serialization for models and fit/risk reports.  Doubles round-trip
// bit-exactly (shortest-representation printing on write, exact binary64
// parse on read).
#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "thorne/common.hpp"
#include "thorne/fit.hpp"
#include "thorne/model.hpp"
#include "thorne/risk.hpp"

namespace thorne {

inline constexpr int model_schema_version = 1;

inline nlohmann::json to_json(const ComponentGaussian& c) {
  return nlohmann::json{
      {"weight", c.weight}, {"mean", c.mean}, {"width", c.width}};
}

inline ComponentGaussian component_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("weight") || !j.contains("width"))
    throw data_error("component JSON must carry weight and width");
  ComponentGaussian c;
  c.weight = j.at("weight").get<double>();
  c.width = j.at("width").get<double>();
  c.mean = j.value("mean", 0.0);
  return c;
}

inline nlohmann::json to_json(const ThorneModel& model) {
  nlohmann::json j;
  j["schema_version"] = model_schema_version;
  auto comps = nlohmann::json::array();
  for (const auto& c : model.components()) comps.push_back(to_json(c));
  j["components"] = std::move(comps);
  if (model.has_cached_normalization())
    j["normalization"] = model.normalization();
  return j;
}

inline ThorneModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("components"))
    throw data_error("model JSON must carry a components array");
  const int version = j.value("schema_version", model_schema_version);
  if (version != model_schema_version)
    throw data_error("unsupported model schema_version " +
                     std::to_string(version));
  std::vector<ComponentGaussian> comps;
  for (const auto& cj : j.at("components"))
    comps.push_back(component_from_json(cj));
  ThorneModel model(std::move(comps));
  if (j.contains("normalization") && j.at("normalization").is_number())
    model.set_normalization(j.at("normalization").get<double>());
  return model;
}

inline std::string model_to_string(const ThorneModel& model, int indent = 2) {
  return to_json(model).dump(indent);
}

inline ThorneModel model_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw data_error(std::string("model JSON parse failure: ") + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const ThorneModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open for writing: " + path);
  out << model_to_string(model) << '\n';
}

inline ThorneModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open for reading: " + path);
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return model_from_string(text);
}

inline nlohmann::json to_json(const NormalityReport& r) {
  return nlohmann::json{{"statistic", r.statistic},
                        {"p_value", r.p_value},
                        {"npp_correlation", r.npp_correlation},
                        {"normal_residuals", r.verdict}};
}

inline nlohmann::json to_json(const FitReport& r) {
  nlohmann::json j;
  j["model"] = to_json(r.model);
  j["n_components"] = r.n_components;
  j["r2"] = r.r2;
  j["r2_adjusted"] = r.r2_adjusted;
  j["std_error"] = r.std_error;
  j["f_statistic"] = r.f_statistic;
  j["sse"] = r.sse;
  j["ise_transformed"] = r.ise_transformed;
  j["ise_density"] = r.ise_density;
  j["d_min"] = r.d_min;
  j["t_stats"] = r.t_stats;
  j["converged"] = r.converged;
  j["ill_conditioned"] = r.ill_conditioned;
  j["normality"] = to_json(r.normality);
  auto ladder = nlohmann::json::array();
  for (const auto& step : r.ladder)
    ladder.push_back(nlohmann::json{{"n_components", step.n_components},
                                    {"r2", step.r2},
                                    {"f_statistic", step.f_statistic},
                                    {"sse", step.sse}});
  j["ladder"] = std::move(ladder);
  return j;
}

inline nlohmann::json to_json(const RiskReport& r) {
  return nlohmann::json{{"level", r.level},
                        {"tail", tail_name(r.tail)},
                        {"value_at_risk", r.var},
                        {"expected_shortfall", r.expected_shortfall}};
}

}  // namespace thorne
