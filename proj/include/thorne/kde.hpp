// Kernel density estimation: fixed-bandwidth Gaussian KDE, the
// Sheather-Jones solve-the-equation plug-in bandwidth, and the model-kernel
// zero-bias estimator with per-observation bandwidths.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "thorne/common.hpp"
#include "thorne/distribution.hpp"
#include "thorne/model.hpp"
#include "thorne/stats.hpp"

namespace thorne {

/// Fixed-bandwidth Gaussian kernel density estimate at x.
inline double gaussian_kde(const std::vector<double>& data, double bandwidth,
                           double x) {
  if (data.empty()) throw data_error("gaussian_kde: empty data");
  if (!(bandwidth > 0.0)) throw config_error("gaussian_kde: bandwidth must be > 0");
  double s = 0.0;
  for (double xi : data) s += normal_pdf((x - xi) / bandwidth);
  return s / (static_cast<double>(data.size()) * bandwidth);
}

namespace detail {

/// (1/(n^2 g^{order+1})) sum_{i,j} phi^{(order)}((X_i - X_j)/g).
inline double kde_functional(const std::vector<double>& data, double g, int order) {
  const std::size_t n = data.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      s += normal_pdf_derivative(order, (data[i] - data[j]) / g);
  const double nn = static_cast<double>(n);
  return s / (nn * nn * std::pow(g, order + 1));
}

}  // namespace detail

/// Sheather-Jones solve-the-equation plug-in bandwidth.
inline double sheather_jones_bandwidth(const std::vector<double>& data) {
  if (data.size() < 10)
    throw data_error("sheather_jones_bandwidth: need at least 10 observations");
  const double n = static_cast<double>(data.size());
  const double sig =
      std::min(stddev(data), interquartile_range(data) / 1.349);
  if (!(sig > 0.0))
    throw data_error("sheather_jones_bandwidth: degenerate data");
  const double a = 0.920 * sig * std::pow(n, -1.0 / 7.0);
  const double b = 0.912 * sig * std::pow(n, -1.0 / 9.0);
  const double s_a = detail::kde_functional(data, a, 4);
  const double t_b = -detail::kde_functional(data, b, 6);
  if (!(s_a > 0.0) || !(t_b > 0.0))
    throw numerical_error("sheather_jones_bandwidth: pilot functionals not positive");
  const auto alpha2 = [&](double h) {
    return 1.357 * std::pow(s_a / t_b, 1.0 / 7.0) * std::pow(h, 5.0 / 7.0);
  };
  const auto eq = [&](double h) {
    const double s = detail::kde_functional(data, alpha2(h), 4);
    return std::pow(1.0 / (2.0 * std::sqrt(pi) * n * s), 0.2) - h;
  };
  const double h0 = 1.06 * sig * std::pow(n, -0.2);
  double lo = h0 / 20.0, hi = h0 * 5.0;
  double flo = eq(lo), fhi = eq(hi);
  for (int i = 0; i < 8 && flo * fhi > 0.0; ++i) {
    // expand the bracket (eq is decreasing in h for well-behaved samples)
    if (flo < 0.0) {
      lo /= 4.0;
      flo = eq(lo);
    } else {
      hi *= 2.0;
      fhi = eq(hi);
    }
  }
  if (flo * fhi > 0.0)
    throw numerical_error("sheather_jones_bandwidth: no sign change when solving "
                          "the bandwidth equation");
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = eq(mid);
    if (fm * flo <= 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
    if (hi - lo < 1e-10 * h0) break;
  }
  return 0.5 * (lo + hi);
}

/// Gaussian KDE with the Sheather-Jones bandwidth, cached for bulk evaluation.
class SheatherJonesEstimator {
 public:
  explicit SheatherJonesEstimator(std::vector<double> data)
      : data_(std::move(data)), bandwidth_(sheather_jones_bandwidth(data_)) {}
  double bandwidth() const { return bandwidth_; }
  double operator()(double x) const { return gaussian_kde(data_, bandwidth_, x); }

 private:
  std::vector<double> data_;
  double bandwidth_;
};

inline double sheather_jones_density(const std::vector<double>& data, double x) {
  return gaussian_kde(data, sheather_jones_bandwidth(data), x);
}

// ---------------------------------------------------------------------------
// Zero-bias estimator: kernel = the pilot model's own density standardized to
// zero mean / unit scale; per-observation bandwidth h0(X_i) is the largest h
// whose leading bias term (h^2/2) mu2(K) f''(X_i) stays within
// bias_tolerance * f(X_i), floored at bandwidth_floor.  f and f'' come from
// the pilot model analytically.
// ---------------------------------------------------------------------------
struct KdeConfig {
  ThorneModel pilot;
  double bias_tolerance = 0.05;
  double bandwidth_floor = 1e-4;
};

/// First derivative of the pilot's log-sum S at x.
inline double log_sum_derivative(const ThorneModel& m, double x) {
  double s = 0.0;
  for (const auto& c : m.components()) {
    const double z = (x - c.mean) / c.width;
    s -= c.weight * z / (c.width * c.width) * normal_pdf(z);
  }
  return s;
}

/// Second derivative of the pilot's log-sum S at x.
inline double log_sum_second_derivative(const ThorneModel& m, double x) {
  double s = 0.0;
  for (const auto& c : m.components()) {
    const double z = (x - c.mean) / c.width;
    s += c.weight / (c.width * c.width * c.width) * (z * z - 1.0) * normal_pdf(z);
  }
  return s;
}

/// Second derivative of the pilot's normalized density at x.
inline double pdf_second_derivative(const ThorneModel& m, double x) {
  const double s = m.log_sum(x);
  const double s1 = log_sum_derivative(m, x);
  const double s2 = log_sum_second_derivative(m, x);
  return (s2 + s1 * s1) * std::exp(s) / m.normalization();
}

class ZeroBiasKde {
 public:
  ZeroBiasKde(std::vector<double> data, KdeConfig cfg)
      : data_(std::move(data)), cfg_(std::move(cfg)) {
    if (data_.empty()) throw data_error("ZeroBiasKde: empty data");
    if (!(cfg_.bias_tolerance > 0.0))
      throw config_error("ZeroBiasKde: bias_tolerance must be > 0");
    if (!(cfg_.bandwidth_floor > 0.0))
      throw config_error("ZeroBiasKde: bandwidth_floor must be > 0");
    const MomentSummary mom = moments(cfg_.pilot);
    pilot_mean_ = mom.mean;
    pilot_scale_ = mom.std_dev;
    // standardized kernel has unit scale, so mu2(K) = 1
    const auto [mn, mx] = std::minmax_element(data_.begin(), data_.end());
    const double h_cap = std::max(*mx - *mn, cfg_.bandwidth_floor);
    bandwidths_.resize(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const double f = cfg_.pilot.pdf(data_[i]);
      const double f2 = std::fabs(pdf_second_derivative(cfg_.pilot, data_[i]));
      double h;
      if (f2 > 0.0 && f > 0.0) {
        h = std::sqrt(2.0 * cfg_.bias_tolerance * f / f2);
      } else {
        h = h_cap;  // vanishing curvature: bias-free at any width
      }
      if (!std::isfinite(h))
        throw numerical_error("ZeroBiasKde: bandwidth failed at observation " +
                              std::to_string(i));
      bandwidths_[i] = std::clamp(h, cfg_.bandwidth_floor, h_cap);
    }
  }

  /// Standardized pilot kernel K(u): unit-scale density, centered.
  double kernel(double u) const {
    return pilot_scale_ * cfg_.pilot.pdf(pilot_mean_ + pilot_scale_ * u);
  }

  double operator()(double x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const double h = bandwidths_[i];
      s += kernel((x - data_[i]) / h) / h;
    }
    return s / static_cast<double>(data_.size());
  }

  const std::vector<double>& bandwidths() const { return bandwidths_; }

 private:
  std::vector<double> data_;
  KdeConfig cfg_;
  double pilot_mean_ = 0.0, pilot_scale_ = 1.0;
  std::vector<double> bandwidths_;
};

inline double zero_bias_kde(const std::vector<double>& data, const KdeConfig& cfg,
                            double x) {
  return ZeroBiasKde(data, cfg)(x);
}

}  // namespace thorne
