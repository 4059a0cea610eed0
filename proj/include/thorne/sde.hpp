// Stochastic paths: Euler-Maruyama simulation of
//   dX = sum_i w_i (mu_i X dt + sigma_i X dW),   one common Wiener process,
// and the per-component closed-form construction
//   X(t) = X_0 sum_i w_i exp((mu_i - sigma_i^2/2) t + sigma_i W_t)
// (the corrected default; the literal printed variant, which keeps the time
// increment outside the exponent, is retained behind a flag for comparison).
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "thorne/common.hpp"
#include "thorne/model.hpp"
#include "thorne/random.hpp"

namespace thorne {

struct SdeComponent {
  double weight = 1.0;     ///< w_i
  double drift = 0.0;      ///< mu_i per unit time
  double diffusion = 0.0;  ///< sigma_i per sqrt(time)
};

struct SdeSpec {
  std::vector<SdeComponent> components;
  double x0 = 1.0;
  double dt = 1e-3;
  std::size_t steps = 1000;

  double weight_sum() const {
    double s = 0.0;
    for (const auto& c : components) s += c.weight;
    return s;
  }
  void validate(bool require_unit_weights) const {
    if (components.empty())
      throw config_error("SdeSpec: at least one component required");
    for (const auto& c : components) {
      if (!(c.weight > 0.0)) throw config_error("SdeSpec: weights must be > 0");
      if (!(c.diffusion >= 0.0))
        throw config_error("SdeSpec: diffusions must be >= 0");
    }
    if (!(x0 > 0.0)) throw config_error("SdeSpec: x0 must be > 0");
    if (!(dt > 0.0)) throw config_error("SdeSpec: dt must be > 0");
    if (require_unit_weights && std::fabs(weight_sum() - 1.0) > 1e-12)
      throw config_error(
          "SdeSpec: closed-form paths require component weights summing to 1");
  }
};

struct SamplePath {
  std::vector<double> times;
  std::vector<double> values;
  std::size_t negative_crossings = 0;  ///< sign changes seen along the path
};

/// Identity mapping of a fitted model onto SDE coefficients: (w, mu, sigma)
/// become (weight, drift per unit time, diffusion per sqrt(time)), with the
/// weights renormalized to sum to 1 when requested (required by the
/// closed-form construction).  The coefficient reuse is a modeling
/// convention, not a derivation.
inline SdeSpec to_sde_spec(const ThorneModel& m, double x0, double dt,
                           std::size_t steps, bool normalize_weights = true) {
  SdeSpec spec;
  spec.x0 = x0;
  spec.dt = dt;
  spec.steps = steps;
  const double wsum = [&] {
    double s = 0.0;
    for (const auto& c : m.components()) s += c.weight;
    return s;
  }();
  for (const auto& c : m.components())
    spec.components.push_back(
        {normalize_weights ? c.weight / wsum : c.weight, c.mean, c.width});
  return spec;
}

/// Euler-Maruyama path with a single shared Wiener increment per step.
inline SamplePath simulate_euler(const SdeSpec& spec, std::uint64_t seed) {
  spec.validate(/*require_unit_weights=*/false);
  RandomStream rng(seed);
  SamplePath path;
  path.times.resize(spec.steps + 1);
  path.values.resize(spec.steps + 1);
  path.times[0] = 0.0;
  path.values[0] = spec.x0;
  const double sqrt_dt = std::sqrt(spec.dt);
  double x = spec.x0;
  for (std::size_t k = 0; k < spec.steps; ++k) {
    const double dw = sqrt_dt * rng.normal();
    double dx = 0.0;
    for (const auto& c : spec.components)
      dx += c.weight * (c.drift * x * spec.dt + c.diffusion * x * dw);
    const double x_next = x + dx;
    if ((x > 0.0 && x_next < 0.0) || (x < 0.0 && x_next > 0.0))
      ++path.negative_crossings;
    x = x_next;
    path.times[k + 1] = static_cast<double>(k + 1) * spec.dt;
    path.values[k + 1] = x;
  }
  return path;
}

/// Closed-form path on the given time grid.  With `corrected` (default) the
/// standard per-component solution is used; without it, the literal printed
/// form X_0 sum w_i exp(mu_i - sigma_i^2/2) (t + sigma_i W_t) is evaluated,
/// reading the printed time differential as elapsed time.
inline SamplePath simulate_closed_form(const SdeSpec& spec,
                                       const std::vector<double>& times,
                                       std::uint64_t seed,
                                       bool corrected = true) {
  spec.validate(/*require_unit_weights=*/corrected);
  if (times.empty() || times.front() != 0.0)
    throw config_error("simulate_closed_form: times must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw config_error("simulate_closed_form: times must be increasing");
  RandomStream rng(seed);
  SamplePath path;
  path.times = times;
  path.values.resize(times.size());
  double w = 0.0;  // cumulative Wiener value
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0) w += std::sqrt(times[k] - times[k - 1]) * rng.normal();
    const double t = times[k];
    double x = 0.0;
    for (const auto& c : spec.components) {
      if (corrected) {
        x += c.weight * std::exp((c.drift - 0.5 * c.diffusion * c.diffusion) * t +
                                 c.diffusion * w);
      } else {
        x += c.weight * std::exp(c.drift - 0.5 * c.diffusion * c.diffusion) *
             (t + c.diffusion * w);
      }
    }
    path.values[k] = spec.x0 * x;
  }
  return path;
}

/// Independent paths with per-path derived seeds (deterministic ensemble).
inline std::vector<SamplePath> simulate_ensemble(const SdeSpec& spec,
                                                 std::size_t n_paths,
                                                 std::uint64_t base_seed) {
  std::vector<SamplePath> out;
  out.reserve(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i)
    out.push_back(simulate_euler(spec, derive_seed(base_seed, i)));
  return out;
}

/// Delimiter-separated export: time, value (ensemble adds path_id).
inline std::string export_path(const SamplePath& p, char delimiter = '\t') {
  std::ostringstream os;
  os << "time" << delimiter << "value" << '\n' << std::setprecision(15);
  for (std::size_t i = 0; i < p.times.size(); ++i)
    os << p.times[i] << delimiter << p.values[i] << '\n';
  return os.str();
}

inline std::string export_ensemble(const std::vector<SamplePath>& paths,
                                   char delimiter = '\t') {
  std::ostringstream os;
  os << "path_id" << delimiter << "time" << delimiter << "value" << '\n'
     << std::setprecision(15);
  for (std::size_t j = 0; j < paths.size(); ++j)
    for (std::size_t i = 0; i < paths[j].times.size(); ++i)
      os << j << delimiter << paths[j].times[i] << delimiter
         << paths[j].values[i] << '\n';
  return os.str();
}

}  // namespace thorne
