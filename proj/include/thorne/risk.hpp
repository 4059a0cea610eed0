// Risk measures on a fitted distribution: value-at-risk, expected shortfall,
// and an ensemble max-drawdown convenience built on the diffusion simulator.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "thorne/common.hpp"
#include "thorne/distribution.hpp"
#include "thorne/model.hpp"
#include "thorne/quadrature.hpp"
#include "thorne/sde.hpp"
#include "thorne/stats.hpp"

namespace thorne {

enum class Tail { lower, upper };

inline const char* tail_name(Tail t) {
  return t == Tail::lower ? "lower" : "upper";
}

struct RiskReport {
  double level = 0.0;  ///< tail probability alpha
  double var = 0.0;
  double expected_shortfall = 0.0;
  Tail tail = Tail::lower;
};

/// Value-at-risk at tail probability `level` (0 < level < 0.5): the lower
/// tail reports quantile(level), the upper tail quantile(1 - level).
inline double value_at_risk(const ThorneModel& model, double level,
                            Tail tail = Tail::lower) {
  if (!(level > 0.0 && level < 0.5))
    throw config_error("value_at_risk: level must be in (0, 0.5)");
  return tail == Tail::lower ? quantile(model, level)
                             : quantile(model, 1.0 - level);
}

/// Expected shortfall at tail probability `level`: the mean of the
/// distribution conditional on exceeding the value-at-risk,
/// (1/level) * integral of x f(x) over the tail beyond it.
inline RiskReport expected_shortfall(const ThorneModel& model, double level,
                                     Tail tail = Tail::lower) {
  RiskReport rep;
  rep.level = level;
  rep.tail = tail;
  rep.var = value_at_risk(model, level, tail);
  const auto integrand = [&](double x) { return x * model.pdf(x); };
  const auto [wlo, whi] =
      auto_window([&](double x) { return std::fabs(integrand(x)); },
                  model.center_hint(), model.scale_hint());
  QuadratureResult q;
  if (tail == Tail::lower) {
    const double lo = std::min(wlo, rep.var - model.scale_hint());
    q = integrate(integrand, lo, rep.var, 1e-10, 1e-13);
  } else {
    const double hi = std::max(whi, rep.var + model.scale_hint());
    q = integrate(integrand, rep.var, hi, 1e-10, 1e-13);
  }
  if (!q.converged || !std::isfinite(q.value))
    throw numerical_error("expected_shortfall: tail integral diverged");
  rep.expected_shortfall = q.value / level;
  return rep;
}

// ---------------------------------------------------------------------------
// Ensemble max drawdown.
// ---------------------------------------------------------------------------
struct MaxDrawdownReport {
  std::vector<double> drawdowns;  ///< per-path maximum relative drawdown, sorted
  double mean = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
};

/// Maximum relative drawdown of one path: max over time of
/// (running peak - value) / running peak.
inline double max_drawdown(const SamplePath& path) {
  if (path.values.empty()) throw data_error("max_drawdown: empty path");
  double peak = path.values.front();
  double worst = 0.0;
  for (double v : path.values) {
    peak = std::max(peak, v);
    if (peak > 0.0) worst = std::max(worst, (peak - v) / peak);
  }
  return worst;
}

/// Empirical max-drawdown distribution over an Euler ensemble of the
/// diffusion induced by `spec`.
inline MaxDrawdownReport max_drawdown_ensemble(const SdeSpec& spec,
                                               std::size_t paths,
                                               std::uint64_t seed) {
  if (paths < 1) throw config_error("max_drawdown_ensemble: paths must be >= 1");
  MaxDrawdownReport rep;
  rep.drawdowns.reserve(paths);
  for (std::size_t i = 0; i < paths; ++i)
    rep.drawdowns.push_back(
        max_drawdown(simulate_euler(spec, derive_seed(seed, i))));
  std::sort(rep.drawdowns.begin(), rep.drawdowns.end());
  rep.mean = mean(rep.drawdowns);
  rep.median = sample_quantile(rep.drawdowns, 0.5);
  rep.q05 = sample_quantile(rep.drawdowns, 0.05);
  rep.q95 = sample_quantile(rep.drawdowns, 0.95);
  return rep;
}

}  // namespace thorne
