#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "thorne/kde.hpp"
#include "thorne/model.hpp"
#include "thorne/quadrature.hpp"
#include "thorne/random.hpp"
#include "thorne/validation.hpp"

using namespace thorne;

namespace {
std::vector<double> normal_sample(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = rng.normal();
  return out;
}
}  // namespace

TEST_CASE("gaussian kde with one point is the kernel itself", "[kde]") {
  const std::vector<double> one{0.0};
  for (double x : {-1.5, 0.0, 0.4})
    REQUIRE_THAT(gaussian_kde(one, 1.0, x),
                 Catch::Matchers::WithinRel(normal_pdf(x), 1e-14));
}

TEST_CASE("plug-in bandwidth is close to the error-optimal one", "[kde]") {
  const auto data = normal_sample(1000, 424242);
  const double h_sj = sheather_jones_bandwidth(data);
  REQUIRE(h_sj > 0.0);

  // brute-force search for the bandwidth minimizing the true error
  double best_h = 0.0, best_err = 1e300;
  for (double h = 0.08; h <= 0.80; h += 0.02) {
    const double err = ise([&](double x) { return gaussian_kde(data, h, x); },
                           [](double x) { return normal_pdf(x); });
    if (err < best_err) {
      best_err = err;
      best_h = h;
    }
  }
  REQUIRE_THAT(h_sj, Catch::Matchers::WithinAbs(best_h, 0.2 * best_h));

  // estimator object agrees with the free function
  const SheatherJonesEstimator est(data);
  REQUIRE(est.bandwidth() == h_sj);
  REQUIRE_THAT(est(0.3),
               Catch::Matchers::WithinRel(gaussian_kde(data, h_sj, 0.3), 1e-14));
}

TEST_CASE("plug-in bandwidth input guards", "[kde]") {
  REQUIRE_THROWS_AS(sheather_jones_bandwidth({1.0, 2.0}), data_error);
  REQUIRE_THROWS_AS(sheather_jones_bandwidth(std::vector<double>(50, 3.14)),
                    data_error);
}

TEST_CASE("model-induced derivatives match finite differences", "[kde]") {
  const ThorneModel m({{1.0, 0.1, 1.0}, {3.0, -0.2, 2.5}});
  const double h = 1e-6;
  for (double x : {-3.0, -0.4, 0.0, 1.2, 5.5}) {
    const double d1_fd = (m.log_sum(x + h) - m.log_sum(x - h)) / (2 * h);
    REQUIRE_THAT(log_sum_derivative(m, x),
                 Catch::Matchers::WithinAbs(d1_fd, 1e-7));
    const double d2_fd =
        (m.log_sum(x + h) - 2 * m.log_sum(x) + m.log_sum(x - h)) / (h * h);
    REQUIRE_THAT(log_sum_second_derivative(m, x),
                 Catch::Matchers::WithinAbs(d2_fd, 1e-4));
    const double p2_fd = (m.pdf(x + h) - 2 * m.pdf(x) + m.pdf(x - h)) / (h * h);
    REQUIRE_THAT(pdf_second_derivative(m, x),
                 Catch::Matchers::WithinAbs(p2_fd, 1e-3));
  }
}

TEST_CASE("variable-bandwidth estimator degenerates to fixed bandwidth",
          "[kde]") {
  const auto data = normal_sample(400, 9);
  KdeConfig cfg;
  cfg.pilot = ThorneModel({{1.0, 0.0, 1.0}, {3.0, 0.0, 2.5}});
  cfg.bias_tolerance = 1e-280;  // forces every bandwidth onto the floor
  cfg.bandwidth_floor = 0.35;
  const ZeroBiasKde kde(data, cfg);
  for (double b : kde.bandwidths()) REQUIRE(b == 0.35);

  // manual fixed-bandwidth sum with the same standardized pilot kernel
  const MomentSummary mom = moments(cfg.pilot);
  for (double x : {-1.0, 0.0, 0.7, 2.2}) {
    double acc = 0.0;
    for (double xi : data) {
      const double u = (x - xi) / 0.35;
      acc += mom.std_dev * cfg.pilot.pdf(mom.mean + mom.std_dev * u) / 0.35;
    }
    REQUIRE_THAT(kde(x),
                 Catch::Matchers::WithinRel(acc / data.size(), 1e-10));
  }
}

TEST_CASE("variable-bandwidth estimator integrates to about one", "[kde]") {
  const auto data = normal_sample(300, 123);
  KdeConfig cfg;
  cfg.pilot = ThorneModel({{1.0, 0.0, 1.0}, {3.0, 0.0, 2.5}});
  const ZeroBiasKde kde(data, cfg);
  for (double b : kde.bandwidths()) {
    REQUIRE(b >= cfg.bandwidth_floor);
    REQUIRE(std::isfinite(b));
  }
  const auto q = integrate_line([&](double x) { return kde(x); }, 0.0, 2.0,
                                1e-8, 1e-12);
  REQUIRE(q.converged);
  REQUIRE_THAT(q.value, Catch::Matchers::WithinAbs(1.0, 1e-4));
}
