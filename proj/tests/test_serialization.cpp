#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <string>

#include "thorne/distribution.hpp"
#include "thorne/risk.hpp"
#include "thorne/serialization.hpp"

using namespace thorne;

TEST_CASE("model JSON round trip is bit exact", "[serialization]") {
  // deliberately awkward doubles: many digits, subnormal-ish spreads
  const ThorneModel m({{0.1, -1.0 / 3.0, 0.123456789012345678},
                       {2.718281828459045, 1e-8, 1.7320508075688772},
                       {31.4159, 12345.6789, 314.159265358979}});
  const std::string text = model_to_string(m);
  const ThorneModel back = model_from_string(text);
  REQUIRE(back.components().size() == m.components().size());
  for (std::size_t i = 0; i < m.components().size(); ++i) {
    REQUIRE(back.components()[i].weight == m.components()[i].weight);
    REQUIRE(back.components()[i].mean == m.components()[i].mean);
    REQUIRE(back.components()[i].width == m.components()[i].width);
  }
  // no cache was computed, so none should be serialized
  REQUIRE(text.find("normalization") == std::string::npos);
}

TEST_CASE("normalization cache survives the round trip", "[serialization]") {
  const ThorneModel m({{1.0, 0.0, 1.0}, {3.0, 0.0, 2.5}});
  m.pdf(0.0);  // force the lazy normalization
  REQUIRE(m.has_cached_normalization());
  const ThorneModel back = model_from_string(model_to_string(m));
  REQUIRE(back.has_cached_normalization());
  REQUIRE(back.normalization() == m.normalization());
  // a parsed model with the cache evaluates without re-integrating
  REQUIRE(back.pdf(0.7) == m.pdf(0.7));
}

TEST_CASE("malformed model JSON raises data errors", "[serialization]") {
  REQUIRE_THROWS_AS(model_from_string("not json at all"), data_error);
  REQUIRE_THROWS_AS(model_from_string("[1, 2, 3]"), data_error);
  REQUIRE_THROWS_AS(model_from_string("{\"weights\": []}"), data_error);
  // component missing its width
  REQUIRE_THROWS_AS(
      model_from_string(
          R"({"components": [{"weight": 1.0, "mean": 0.0}]})"),
      data_error);
  // unknown future schema
  REQUIRE_THROWS_AS(
      model_from_string(
          R"({"schema_version": 99,
              "components": [{"weight": 1.0, "width": 1.0}]})"),
      data_error);
  // structurally valid JSON but an invalid model (negative weight)
  REQUIRE_THROWS_AS(
      model_from_string(
          R"({"components": [{"weight": -1.0, "width": 1.0}]})"),
      config_error);
}

TEST_CASE("component mean defaults to zero when omitted", "[serialization]") {
  const ThorneModel m = model_from_string(
      R"({"components": [{"weight": 1.0, "width": 1.0},
                          {"weight": 2.0, "width": 3.0}]})");
  REQUIRE(m.components()[0].mean == 0.0);
  REQUIRE(m.components()[1].mean == 0.0);
}

TEST_CASE("file save and load round trip", "[serialization]") {
  const ThorneModel m({{1.5, 0.25, 0.9}, {4.0, -0.5, 3.3}});
  const std::string path = "thorne_model_roundtrip_test.json";
  save_model(m, path);
  const ThorneModel back = load_model(path);
  std::remove(path.c_str());
  for (std::size_t i = 0; i < m.components().size(); ++i) {
    REQUIRE(back.components()[i].weight == m.components()[i].weight);
    REQUIRE(back.components()[i].mean == m.components()[i].mean);
    REQUIRE(back.components()[i].width == m.components()[i].width);
  }
  REQUIRE_THROWS_AS(load_model("definitely/not/a/real/path.json"), data_error);
}

TEST_CASE("fit report serializes its headline statistics", "[serialization]") {
  FitReport r;
  r.model = ThorneModel({{1.0, 0.0, 1.0}});
  r.n_components = 1;
  r.r2 = 0.9991;
  r.r2_adjusted = 0.9990;
  r.std_error = 0.01;
  r.f_statistic = 1234.5;
  r.sse = 0.002;
  r.ise_transformed = 0.0015;
  r.ise_density = 3e-5;
  r.d_min = 1e-4;
  r.t_stats = {12.0, 9.5};
  r.converged = true;
  r.ladder.push_back({1, 0.9991, 1234.5, 0.002});
  const nlohmann::json j = to_json(r);
  REQUIRE(j.at("n_components") == 1);
  REQUIRE(j.at("r2") == 0.9991);
  REQUIRE(j.at("converged") == true);
  REQUIRE(j.at("model").at("components").size() == 1);
  REQUIRE(j.at("t_stats").size() == 2);
  REQUIRE(j.at("ladder").size() == 1);
  REQUIRE(j.at("ladder")[0].at("r2") == 0.9991);
  REQUIRE(j.contains("normality"));
}

TEST_CASE("risk report serializes with a readable tail name",
          "[serialization]") {
  const ThorneModel m({{1.0, 0.0, 1.0}, {3.0, 0.0, 2.5}});
  const RiskReport rep = expected_shortfall(m, 0.05, Tail::upper);
  const nlohmann::json j = to_json(rep);
  REQUIRE(j.at("level") == 0.05);
  REQUIRE(j.at("tail") == "upper");
  REQUIRE(j.at("value_at_risk") == rep.var);
  REQUIRE(j.at("expected_shortfall") == rep.expected_shortfall);
}
