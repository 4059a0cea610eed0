#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "thorne/distribution.hpp"
#include "thorne/quadrature.hpp"
#include "thorne/risk.hpp"
#include "thorne/stats.hpp"

using namespace thorne;

namespace {

ThorneModel symmetric_model() {
  return ThorneModel({{1.0, 0.0, 1.0}, {3.0, 0.0, 2.5}});
}

ThorneModel leptokurtic_model() {
  return ThorneModel({{0.6, 0.0, 0.5}, {1.2, 0.0, 1.6}, {2.0, 0.0, 5.0}});
}

}  // namespace

TEST_CASE("value-at-risk validates its level and matches the quantiles",
          "[risk]") {
  const auto m = symmetric_model();
  REQUIRE_THROWS_AS(value_at_risk(m, 0.0), config_error);
  REQUIRE_THROWS_AS(value_at_risk(m, 0.5), config_error);
  REQUIRE_THROWS_AS(value_at_risk(m, -0.1), config_error);
  REQUIRE_THROWS_AS(value_at_risk(m, 0.7), config_error);

  for (double a : {0.01, 0.05, 0.25}) {
    REQUIRE(value_at_risk(m, a, Tail::lower) == quantile(m, a));
    REQUIRE(value_at_risk(m, a, Tail::upper) == quantile(m, 1.0 - a));
  }
  // symmetric law: the two tails mirror each other
  REQUIRE_THAT(value_at_risk(m, 0.05, Tail::lower),
               Catch::Matchers::WithinAbs(-value_at_risk(m, 0.05, Tail::upper),
                                          1e-8));
  // deeper tail probability -> more extreme threshold
  REQUIRE(value_at_risk(m, 0.01) < value_at_risk(m, 0.05));
  REQUIRE(value_at_risk(m, 0.05) < value_at_risk(m, 0.25));
}

TEST_CASE("value-at-risk agrees with an independent bisection", "[risk]") {
  const auto m = leptokurtic_model();
  const double alpha = 0.01;
  // bisect cdf(x) = alpha with nothing but the density quadrature
  double lo = -500.0, hi = 0.0;
  auto cdf_of = [&](double x) {
    return integrate([&](double t) { return m.pdf(t); }, -2000.0, x, 1e-12,
                     1e-15)
        .value;
  };
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf_of(mid) < alpha ? lo : hi) = mid;
  }
  const double oracle = 0.5 * (lo + hi);
  REQUIRE_THAT(value_at_risk(m, alpha), Catch::Matchers::WithinAbs(oracle, 1e-6));
}

TEST_CASE("expected shortfall sits beyond value-at-risk and matches the tail "
          "integral",
          "[risk]") {
  const auto m = leptokurtic_model();
  for (double a : {0.01, 0.05}) {
    const RiskReport lo = expected_shortfall(m, a, Tail::lower);
    REQUIRE(lo.level == a);
    REQUIRE(lo.tail == Tail::lower);
    REQUIRE(lo.expected_shortfall <= lo.var);

    // alpha * ES equals the tail quadrature of x f(x)
    const auto tail_q = integrate([&](double x) { return x * m.pdf(x); },
                                  -3000.0, lo.var, 1e-12, 1e-15);
    REQUIRE(tail_q.converged);
    REQUIRE_THAT(a * lo.expected_shortfall,
                 Catch::Matchers::WithinAbs(tail_q.value, 1e-8));

    const RiskReport hi = expected_shortfall(m, a, Tail::upper);
    REQUIRE(hi.expected_shortfall >= hi.var);
  }
}

TEST_CASE("heavy tails produce deeper shortfall than a matched normal",
          "[risk]") {
  const auto m = leptokurtic_model();
  const auto mom = moments(m);
  REQUIRE(mom.kurtosis.has_value());
  REQUIRE(mom.kurtosis.value() > 3.0);

  const double a = 0.01;
  const double sd = mom.std_dev;
  const double z = normal_quantile(a);
  // closed-form shortfall of N(mean, sd^2): mean - sd phi(z_a) / a
  const double gauss_es = mom.mean - sd * normal_pdf(z) / a;
  const RiskReport rep = expected_shortfall(m, a, Tail::lower);
  REQUIRE(std::fabs(rep.expected_shortfall) > std::fabs(gauss_es));
}

TEST_CASE("risk measures are translation equivariant and positively "
          "homogeneous",
          "[risk]") {
  const auto m = leptokurtic_model();
  const double a = 0.025;
  const double shift = 7.5;
  const auto shifted = m.translated(shift);
  REQUIRE_THAT(value_at_risk(shifted, a),
               Catch::Matchers::WithinAbs(value_at_risk(m, a) + shift, 1e-6));
  REQUIRE_THAT(expected_shortfall(shifted, a).expected_shortfall,
               Catch::Matchers::WithinAbs(
                   expected_shortfall(m, a).expected_shortfall + shift, 1e-6));

  // scaling every component width and mean by lambda scales both measures
  const double lambda = 2.5;
  std::vector<ComponentGaussian> scaled;
  for (const auto& c : m.components())
    scaled.push_back({c.weight, lambda * c.mean, lambda * c.width});
  const ThorneModel ms(scaled);
  REQUIRE_THAT(value_at_risk(ms, a),
               Catch::Matchers::WithinRel(lambda * value_at_risk(m, a), 1e-6));
  REQUIRE_THAT(
      expected_shortfall(ms, a).expected_shortfall,
      Catch::Matchers::WithinRel(
          lambda * expected_shortfall(m, a).expected_shortfall, 1e-6));
}

TEST_CASE("shortfall averages toward the mean as the level approaches one "
          "half",
          "[risk]") {
  const auto m = symmetric_model().translated(3.0);
  const double a = 0.49;
  const double lo = expected_shortfall(m, a, Tail::lower).expected_shortfall;
  const double hi = expected_shortfall(m, a, Tail::upper).expected_shortfall;
  REQUIRE_THAT(0.5 * (lo + hi),
               Catch::Matchers::WithinAbs(moments(m).mean, 5e-3));
}

TEST_CASE("max drawdown of a path follows the running peak", "[risk]") {
  SamplePath p;
  p.times = {0.0, 1.0, 2.0};
  p.values = {1.0, 0.5, 0.75};
  REQUIRE_THAT(max_drawdown(p), Catch::Matchers::WithinAbs(0.5, 1e-15));

  SamplePath up;
  up.times = {0.0, 1.0, 2.0, 3.0};
  up.values = {1.0, 1.5, 2.0, 4.0};
  REQUIRE(max_drawdown(up) == 0.0);

  SamplePath late_peak;
  late_peak.times = {0.0, 1.0, 2.0, 3.0};
  late_peak.values = {1.0, 2.0, 1.0, 1.8};
  REQUIRE_THAT(max_drawdown(late_peak), Catch::Matchers::WithinAbs(0.5, 1e-15));

  SamplePath empty;
  REQUIRE_THROWS_AS(max_drawdown(empty), data_error);
}

TEST_CASE("drawdown ensemble is deterministic with ordered summaries",
          "[risk]") {
  SdeSpec spec;
  spec.components = {{1.0, 0.05, 0.3}};
  spec.x0 = 1.0;
  spec.dt = 1e-2;
  spec.steps = 200;

  const MaxDrawdownReport a = max_drawdown_ensemble(spec, 64, 99);
  const MaxDrawdownReport b = max_drawdown_ensemble(spec, 64, 99);
  REQUIRE(a.drawdowns == b.drawdowns);
  REQUIRE(a.drawdowns.size() == 64);
  REQUIRE(std::is_sorted(a.drawdowns.begin(), a.drawdowns.end()));
  REQUIRE(a.q05 <= a.median);
  REQUIRE(a.median <= a.q95);
  REQUIRE(a.mean > 0.0);
  REQUIRE(a.drawdowns.front() >= 0.0);
  REQUIRE(a.drawdowns.back() <= 1.0);

  REQUIRE_THROWS_AS(max_drawdown_ensemble(spec, 0, 99), config_error);
}
