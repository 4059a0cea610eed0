#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "thorne/fit.hpp"
#include "thorne/histogram.hpp"
#include "thorne/model.hpp"
#include "thorne/optimized_histogram.hpp"
#include "thorne/random.hpp"
#include "thorne/validation.hpp"

using namespace thorne;

namespace {

// noiseless transformed data sampled from a model's Gaussian sum
TransformedHistogram synthetic_transformed(const ThorneModel& m, double lo,
                                           double hi, std::size_t bins) {
  TransformedHistogram th;
  th.sample_count = bins;
  th.d_min = 1e-3;
  th.source_normalized = true;
  const double w = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    const double x = lo + (static_cast<double>(i) + 0.5) * w;
    th.centers.push_back(x);
    th.ordinates.push_back(m.log_sum(x));
    th.widths.push_back(w);
  }
  return th;
}

}  // namespace

TEST_CASE("transform maps densities to shifted-log ordinates", "[fit]") {
  DensityHistogram h;
  h.edges = {0.0, 1.0, 2.0, 3.0, 4.0};
  h.densities = {0.1, 0.4, 0.0, 0.5};
  h.counts = {1, 4, 0, 5};
  h.representatives = {0.5, 1.5, 2.5, 3.5};
  h.sample_count = 10;
  h.normalized = true;
  const TransformedHistogram th = transform_histogram(h);
  REQUIRE(th.d_min == 0.1);
  REQUIRE_THAT(th.ordinates[0], Catch::Matchers::WithinRel(std::log(2.0), 1e-14));
  REQUIRE_THAT(th.ordinates[1], Catch::Matchers::WithinRel(std::log(5.0), 1e-14));
  REQUIRE(th.ordinates[2] == 0.0);  // empty bin stays at zero
  REQUIRE(th.centers == h.representatives);

  // inverting the transform recovers the densities
  for (std::size_t i = 0; i < th.ordinates.size(); ++i) {
    const double back = th.d_min * std::expm1(th.ordinates[i]);
    REQUIRE_THAT(back, Catch::Matchers::WithinAbs(h.densities[i], 1e-14));
  }

  DensityHistogram zero = h;
  zero.densities = {0.0, 0.0, 0.0, 0.0};
  REQUIRE_THROWS_AS(transform_histogram(zero), data_error);
}

TEST_CASE("noiseless two-component data is recovered exactly", "[fit]") {
  const ThorneModel truth({{1.2, 0.0, 0.8}, {5.0, 0.0, 2.2}});
  const auto th = synthetic_transformed(truth, -12.0, 12.0, 120);
  const FitReport rep = fit_fixed_n(th, 2);
  REQUIRE(rep.converged);
  REQUIRE_FALSE(rep.ill_conditioned);
  REQUIRE(rep.r2 > 1.0 - 1e-10);
  for (std::size_t i = 0; i < 2; ++i) {
    REQUIRE_THAT(rep.model.components()[i].weight,
                 Catch::Matchers::WithinRel(truth.components()[i].weight, 1e-6));
    REQUIRE_THAT(rep.model.components()[i].width,
                 Catch::Matchers::WithinRel(truth.components()[i].width, 1e-6));
  }
}

TEST_CASE("single-bump data keeps the ladder short", "[fit]") {
  const ThorneModel truth({{2.0, 0.0, 1.3}});
  const auto th = synthetic_transformed(truth, -8.0, 8.0, 90);
  const FitReport rep = auto_fit(th);
  REQUIRE(rep.n_components <= 2);
  REQUIRE(rep.r2 > 0.999999);
}

TEST_CASE("asymmetric fit recovers a shifted bump", "[fit]") {
  const ThorneModel truth({{2.0, 1.3, 0.9}});
  const auto th = synthetic_transformed(truth, -6.0, 9.0, 90);
  FitOptions opts;
  opts.symmetric = false;
  const FitReport rep = fit_fixed_n(th, 1, opts);
  REQUIRE_THAT(rep.model.components()[0].mean,
               Catch::Matchers::WithinAbs(1.3, 1e-6));
  REQUIRE_THAT(rep.model.components()[0].width,
               Catch::Matchers::WithinRel(0.9, 1e-6));
}

TEST_CASE("explicit initial components are honored", "[fit]") {
  const ThorneModel truth({{1.2, 0.0, 0.8}, {5.0, 0.0, 2.2}});
  const auto th = synthetic_transformed(truth, -12.0, 12.0, 120);
  const std::vector<ComponentGaussian> init{{1.0, 0.0, 0.7}, {4.0, 0.0, 2.5}};
  const FitReport rep = fit_fixed_n(th, 2, init);
  REQUIRE(rep.r2 > 1.0 - 1e-10);
  REQUIRE_THROWS_AS(fit_fixed_n(th, 3, init), config_error);
}

TEST_CASE("analytic gradient matches central differences", "[fit]") {
  const ThorneModel truth({{1.2, 0.0, 0.8}, {5.0, 0.0, 2.2}});
  const auto th = synthetic_transformed(truth, -12.0, 12.0, 100);
  for (bool sym : {true, false}) {
    std::vector<double> params;
    if (sym)
      params = {std::log(0.9), std::log(0.9), std::log(4.2), std::log(2.0)};
    else
      params = {std::log(0.9), 0.1, std::log(0.9),
                std::log(4.2), -0.2, std::log(2.0)};
    const auto grad = objective_gradient(th.centers, th.ordinates, params, sym);
    for (std::size_t j = 0; j < params.size(); ++j) {
      const double h = 1e-6 * std::max(1.0, std::fabs(params[j]));
      auto pp = params, pm = params;
      pp[j] += h;
      pm[j] -= h;
      const double fd = (objective_value(th.centers, th.ordinates, pp, sym) -
                         objective_value(th.centers, th.ordinates, pm, sym)) /
                        (2.0 * h);
      REQUIRE_THAT(grad[j],
                   Catch::Matchers::WithinAbs(fd, 1e-6 * std::max(1.0, std::fabs(fd))));
    }
  }
}

TEST_CASE("full pipeline fit carries sensible diagnostics", "[fit]") {
  const auto data = synthetic_sample(20000, 5);
  const OptimizedHistogram oh = optimized_histogram(data);
  const TransformedHistogram th = transform_histogram(oh);
  const FitReport rep = auto_fit(th);

  REQUIRE(rep.converged);
  REQUIRE(rep.n_components >= 3);
  REQUIRE(rep.n_components <= 9);
  REQUIRE(rep.r2 > 0.999);
  REQUIRE(rep.r2_adjusted <= rep.r2);
  REQUIRE(rep.std_error > 0.0);
  REQUIRE(rep.f_statistic > 0.0);
  REQUIRE(rep.residuals.size() == th.centers.size());
  REQUIRE(rep.t_stats.size() == 2 * rep.n_components);
  for (double t : rep.t_stats) REQUIRE(t > 0.0);
  REQUIRE(rep.ladder.size() >= rep.n_components);
  REQUIRE(std::isfinite(rep.normality.statistic));

  // transformed-domain error equals the weighted residual sum
  double iset = 0.0;
  for (std::size_t i = 0; i < rep.residuals.size(); ++i)
    iset += rep.residuals[i] * rep.residuals[i] * th.widths[i];
  REQUIRE_THAT(rep.ise_transformed, Catch::Matchers::WithinRel(iset, 1e-12));

  // widths strictly increase and weights follow the conventional ordering
  for (std::size_t i = 1; i < rep.n_components; ++i)
    REQUIRE(rep.model.components()[i - 1].width <
            rep.model.components()[i].width);
}

TEST_CASE("back-transform reproduces the fitted density", "[fit]") {
  const auto data = synthetic_sample(15000, 21);
  const OptimizedHistogram oh = optimized_histogram(data);
  const TransformedHistogram th = transform_histogram(oh);
  const FitReport rep = auto_fit(th);

  const BackTransform raw{rep.model, th.d_min, /*renormalize=*/false};
  const BackTransform norm{rep.model, th.d_min, /*renormalize=*/true};
  for (double x : {0.0, 0.8, -2.5, 6.0}) {
    REQUIRE_THAT(raw(x),
                 Catch::Matchers::WithinRel(
                     th.d_min * rep.model.pdf_unnormalized(x), 1e-12));
    REQUIRE_THAT(norm(x), Catch::Matchers::WithinRel(rep.model.pdf(x), 1e-12));
  }
}

TEST_CASE("ladder requires enough bins", "[fit]") {
  const ThorneModel truth({{2.0, 0.0, 1.3}});
  const auto th = synthetic_transformed(truth, -4.0, 4.0, 6);
  REQUIRE_THROWS_AS(auto_fit(th), data_error);
  const auto th9 = synthetic_transformed(truth, -4.0, 4.0, 9);
  REQUIRE_THROWS_AS(fit_fixed_n(th9, 4), data_error);
}
