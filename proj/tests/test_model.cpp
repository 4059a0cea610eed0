#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "thorne/model.hpp"
#include "thorne/quadrature.hpp"
#include "thorne/random.hpp"

using namespace thorne;

namespace {

ThorneModel random_model(RandomStream& rng, std::size_t n_comp) {
  std::vector<ComponentGaussian> comps;
  double width = 0.3 + rng.uniform();
  double weight = 0.2 + rng.uniform();
  for (std::size_t i = 0; i < n_comp; ++i) {
    comps.push_back({weight, 2.0 * rng.uniform() - 1.0, width});
    width *= 1.5 + 2.0 * rng.uniform();
    weight *= 1.8 + 3.0 * rng.uniform();
  }
  return ThorneModel(std::move(comps));
}

}  // namespace

TEST_CASE("log of shifted unnormalized density recovers the Gaussian sum",
          "[model]") {
  RandomStream rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const ThorneModel m = random_model(rng, 1 + trial % 5);
    const double span = m.scale_hint() * 3.0;
    for (int i = 0; i < 1000; ++i) {
      const double x = m.center_hint() + span * (2.0 * rng.uniform() - 1.0);
      const double s = m.log_sum(x);
      const double recovered = std::log1p(m.pdf_unnormalized(x));
      worst = std::max(worst, std::fabs(recovered - s));
    }
  }
  REQUIRE(worst < 1e-12);
}

TEST_CASE("construction validates and sorts components", "[model]") {
  // sorted by width regardless of input order
  ThorneModel m({{5.0, 0.0, 2.0}, {1.0, 0.0, 0.5}});
  REQUIRE(m.components().front().width == 0.5);
  REQUIRE(m.components().back().width == 2.0);

  REQUIRE_THROWS_AS(ThorneModel({}), config_error);
  REQUIRE_THROWS_AS(ThorneModel({{-1.0, 0.0, 1.0}}), config_error);
  REQUIRE_THROWS_AS(ThorneModel({{1.0, 0.0, 0.0}}), config_error);
  REQUIRE_THROWS_AS(ThorneModel({{1.0, 0.0, 1.0}, {2.0, 0.0, 1.0}}),
                    config_error);  // equal widths
  // wider component with smaller weight breaks the conventional ordering
  REQUIRE_THROWS_AS(ThorneModel({{5.0, 0.0, 1.0}, {1.0, 0.0, 2.0}}),
                    config_error);
  REQUIRE_NOTHROW(ThorneModel({{5.0, 0.0, 1.0}, {1.0, 0.0, 2.0}},
                              /*enforce_monotone_weights=*/false));
}

TEST_CASE("density is nonnegative and overflow is rejected", "[model]") {
  ThorneModel m({{1.0, 0.0, 1.0}});
  REQUIRE(m.pdf_unnormalized(0.0) > 0.0);
  REQUIRE(m.pdf_unnormalized(40.0) >= 0.0);

  ThorneModel huge({{1e6, 0.0, 0.5}});
  REQUIRE_THROWS_AS(huge.pdf_unnormalized(0.0), config_error);
}

TEST_CASE("normalized density integrates to one", "[model]") {
  ThorneModel m({{1.3, -0.4, 0.7}, {4.0, 0.2, 1.9}, {11.0, 0.0, 5.2}});
  const auto q = integrate_line([&](double x) { return m.pdf(x); },
                                m.center_hint(), m.scale_hint(), 1e-10, 1e-14);
  REQUIRE(q.converged);
  REQUIRE_THAT(q.value, Catch::Matchers::WithinAbs(1.0, 1e-6));
}

TEST_CASE("normalization is translation invariant", "[model]") {
  ThorneModel m({{1.1, 0.3, 0.8}, {3.7, -0.2, 2.1}});
  const double n0 = m.normalization();
  for (double shift : {-250.0, -3.0, 11.5, 4000.0}) {
    const double ns = m.translated(shift).normalization();
    REQUIRE_THAT(ns / n0, Catch::Matchers::WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("far tail of the density reverts to the Gaussian sum", "[model]") {
  // where S is small, exp(S) - 1 ~ S with relative error S/2
  ThorneModel m({{1.0, 0.0, 1.0}, {3.0, 0.0, 2.5}});
  int points_checked = 0;
  for (double x = 5.0; x < 60.0; x += 0.25) {
    const double s = m.log_sum(x);
    if (s >= 1e-3 || s < 1e-300) continue;
    ++points_checked;
    REQUIRE(std::fabs(m.pdf_unnormalized(x) / s - 1.0) < 1e-3);
  }
  REQUIRE(points_checked > 50);
}

TEST_CASE("normalization cache survives copies and can be installed",
          "[model]") {
  ThorneModel m({{1.0, 0.0, 1.0}});
  const double n = m.normalization();
  REQUIRE(m.has_cached_normalization());
  ThorneModel copy = m;
  REQUIRE(copy.has_cached_normalization());
  REQUIRE(copy.normalization() == n);

  ThorneModel fresh({{1.0, 0.0, 1.0}});
  REQUIRE_FALSE(fresh.has_cached_normalization());
  fresh.set_normalization(n);
  REQUIRE(fresh.normalization() == n);
  REQUIRE_THROWS_AS(fresh.set_normalization(-1.0), config_error);
}
