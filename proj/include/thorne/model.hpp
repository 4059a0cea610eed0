// Core density family: f(x) = (exp(S(x)) - 1) / N with S a weighted sum of
// Gaussian bumps.  Components are kept sorted by strictly increasing width;
// the conventional monotone-weight ordering can be enforced at construction.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "thorne/common.hpp"
#include "thorne/quadrature.hpp"

namespace thorne {

struct ComponentGaussian {
  double weight = 1.0;  ///< w_i > 0
  double mean = 0.0;    ///< mu_i
  double width = 1.0;   ///< sigma_i > 0
};

inline bool operator==(const ComponentGaussian& a, const ComponentGaussian& b) {
  return a.weight == b.weight && a.mean == b.mean && a.width == b.width;
}

class ThorneModel {
 public:
  ThorneModel() = default;

  explicit ThorneModel(std::vector<ComponentGaussian> components,
                       bool enforce_monotone_weights = true)
      : components_(std::move(components)),
        monotone_weights_(enforce_monotone_weights) {
    validate();
  }

  const std::vector<ComponentGaussian>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  bool monotone_weights_enforced() const { return monotone_weights_; }

  /// S(x) = sum_i w_i/(sigma_i sqrt(2 pi)) * exp(-(x-mu_i)^2 / (2 sigma_i^2)).
  double log_sum(double x) const {
    double s = 0.0;
    for (const auto& c : components_) {
      const double z = (x - c.mean) / c.width;
      s += c.weight / c.width * normal_pdf(z);
    }
    return s;
  }

  /// exp(S(x)) - 1 >= 0, exactly 0 iff S(x) = 0 (up to expm1 semantics).
  double pdf_unnormalized(double x) const {
    const double s = log_sum(x);
    if (s > 709.0) {
      throw config_error(
          "pdf_unnormalized: exponent overflow (S(x) = " + std::to_string(s) +
          "); component weights/widths place the model outside double range");
    }
    return std::expm1(s);
  }

  /// Normalizing integral N of exp(S)-1 over the real line (cached).
  double normalization() const {
    double n = norm_.load(std::memory_order_relaxed);
    if (std::isnan(n)) {
      n = compute_normalization();
      norm_.store(n, std::memory_order_relaxed);
    }
    return n;
  }

  double pdf(double x) const { return pdf_unnormalized(x) / normalization(); }

  bool has_cached_normalization() const {
    return !std::isnan(norm_.load(std::memory_order_relaxed));
  }

  /// Install a precomputed normalizing integral (e.g. from deserialization).
  void set_normalization(double n) {
    if (!(n > 0.0) || !std::isfinite(n))
      throw config_error("set_normalization: value must be positive and finite");
    norm_.store(n, std::memory_order_relaxed);
  }

  /// Center/scale hints for quadrature windows over this model.
  double center_hint() const {
    double wsum = 0.0, acc = 0.0;
    for (const auto& c : components_) {
      wsum += c.weight;
      acc += c.weight * c.mean;
    }
    return acc / wsum;
  }
  double scale_hint() const {
    double lo = components_.front().mean, hi = lo, wmax = 0.0;
    for (const auto& c : components_) {
      lo = std::min(lo, c.mean);
      hi = std::max(hi, c.mean);
      wmax = std::max(wmax, c.width);
    }
    return (hi - lo) + wmax;
  }

  ThorneModel translated(double shift) const {
    std::vector<ComponentGaussian> comps = components_;
    for (auto& c : comps) c.mean += shift;
    return ThorneModel(std::move(comps), monotone_weights_);
  }

  // copy/assign must not share the cache atomically; value copy is fine
  ThorneModel(const ThorneModel& o)
      : components_(o.components_),
        monotone_weights_(o.monotone_weights_) {
    norm_.store(o.norm_.load(std::memory_order_relaxed), std::memory_order_relaxed);
  }
  ThorneModel& operator=(const ThorneModel& o) {
    components_ = o.components_;
    monotone_weights_ = o.monotone_weights_;
    norm_.store(o.norm_.load(std::memory_order_relaxed), std::memory_order_relaxed);
    return *this;
  }
  ThorneModel(ThorneModel&& o) noexcept
      : components_(std::move(o.components_)),
        monotone_weights_(o.monotone_weights_) {
    norm_.store(o.norm_.load(std::memory_order_relaxed), std::memory_order_relaxed);
  }
  ThorneModel& operator=(ThorneModel&& o) noexcept {
    components_ = std::move(o.components_);
    monotone_weights_ = o.monotone_weights_;
    norm_.store(o.norm_.load(std::memory_order_relaxed), std::memory_order_relaxed);
    return *this;
  }

 private:
  void validate() {
    if (components_.empty())
      throw config_error("ThorneModel: at least one component required");
    std::stable_sort(components_.begin(), components_.end(),
                     [](const ComponentGaussian& a, const ComponentGaussian& b) {
                       return a.width < b.width;
                     });
    for (std::size_t i = 0; i < components_.size(); ++i) {
      const auto& c = components_[i];
      if (!(c.weight > 0.0) || !std::isfinite(c.weight))
        throw config_error("ThorneModel: component " + std::to_string(i) +
                           " has nonpositive or nonfinite weight");
      if (!(c.width > 0.0) || !std::isfinite(c.width))
        throw config_error("ThorneModel: component " + std::to_string(i) +
                           " has nonpositive or nonfinite width");
      if (!std::isfinite(c.mean))
        throw config_error("ThorneModel: component " + std::to_string(i) +
                           " has nonfinite mean");
      if (i > 0 && !(components_[i - 1].width < c.width))
        throw config_error("ThorneModel: widths must be strictly increasing "
                           "(components " + std::to_string(i - 1) + ", " +
                           std::to_string(i) + ")");
      if (monotone_weights_ && i > 0 && !(components_[i - 1].weight < c.weight))
        throw config_error("ThorneModel: monotone-weight convention violated "
                           "at component " + std::to_string(i) +
                           " (construct with enforce_monotone_weights=false "
                           "to allow)");
    }
  }

  double compute_normalization() const {
    const auto f = [this](double x) { return pdf_unnormalized(x); };
    const QuadratureResult q =
        integrate_line(f, center_hint(), scale_hint(), 1e-9, 1e-300);
    if (!q.converged)
      throw numerical_error(
          "normalization: quadrature failed to converge (error estimate " +
          std::to_string(q.error) + ")");
    if (!(q.value > 0.0))
      throw numerical_error("normalization: nonpositive integral");
    return q.value;
  }

  std::vector<ComponentGaussian> components_;
  bool monotone_weights_ = true;
  mutable std::atomic<double> norm_{std::numeric_limits<double>::quiet_NaN()};
};

}  // namespace thorne
