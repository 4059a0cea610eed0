// Distribution-level operations on the model: CDF, quantile, moments,
// inverse-CDF sampling, the family's normalizing constant for the
// single-bump unit-scale case, and the truncated single-bump density.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thorne/common.hpp"
#include "thorne/model.hpp"
#include "thorne/quadrature.hpp"
#include "thorne/random.hpp"

namespace thorne {

struct MomentSummary {
  double mean = 0.0;
  double std_dev = 0.0;
  double skew = 0.0;
  std::optional<double> kurtosis;  ///< empty when the fourth moment fails the
                                   ///< window-doubling convergence test
};

namespace detail {

inline std::pair<double, double> support_window(const ThorneModel& m) {
  const auto f = [&m](double x) { return m.pdf_unnormalized(x); };
  return auto_window(f, m.center_hint(), m.scale_hint());
}

}  // namespace detail

/// CDF by cumulative adaptive quadrature (absolute tolerance 1e-10).
inline double cdf(const ThorneModel& m, double x) {
  const auto [lo, hi] = detail::support_window(m);
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  const double n = m.normalization();
  const auto f = [&m, n](double t) { return m.pdf_unnormalized(t) / n; };
  const QuadratureResult q = integrate(f, lo, x, 1e-12, 1e-10);
  return std::clamp(q.value, 0.0, 1.0);
}

/// Inverse CDF: bracketing bisection until |cdf(x) - p| < 1e-9.
inline double quantile(const ThorneModel& m, double p) {
  if (!(p > 0.0 && p < 1.0))
    throw config_error("quantile: p must lie strictly inside (0, 1)");
  auto [lo, hi] = detail::support_window(m);
  double flo = 0.0, fhi = 1.0;
  for (int i = 0; i < 200; ++i) {
    // secant proposal clipped into the middle 96% of the bracket, else bisect
    double mid = lo + (p - flo) / (fhi - flo) * (hi - lo);
    const double lim_lo = lo + 0.02 * (hi - lo);
    const double lim_hi = hi - 0.02 * (hi - lo);
    if (!(mid >= lim_lo && mid <= lim_hi)) mid = 0.5 * (lo + hi);
    const double fmid = cdf(m, mid);
    if (std::fabs(fmid - p) < 1e-9) return mid;
    if (fmid < p) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
      fhi = fmid;
    }
    if (hi - lo < 1e-14 * (1.0 + std::fabs(lo))) break;
  }
  return 0.5 * (lo + hi);
}

/// First four moments; kurtosis is reported only when the fourth central
/// moment is stable to 1e-3 relative under doubling of the integration window.
inline MomentSummary moments(const ThorneModel& m) {
  const auto [lo, hi] = detail::support_window(m);
  const double n = m.normalization();
  const auto weighted = [&m, n](auto&& g) {
    return [&m, n, g](double x) { return g(x) * m.pdf_unnormalized(x) / n; };
  };
  const double mean =
      integrate(weighted([](double x) { return x; }), lo, hi, 1e-10, 1e-12).value;
  const auto central = [&](int k, double a, double b) {
    return integrate(weighted([mean, k](double x) {
                       double d = x - mean, r = 1.0;
                       for (int i = 0; i < k; ++i) r *= d;
                       return r;
                     }),
                     a, b, 1e-10, 1e-12)
        .value;
  };
  const double m2 = central(2, lo, hi);
  const double m3 = central(3, lo, hi);
  const double m4 = central(4, lo, hi);
  MomentSummary out;
  out.mean = mean;
  if (!(m2 > 0.0)) throw numerical_error("moments: nonpositive variance");
  out.std_dev = std::sqrt(m2);
  out.skew = m3 / (m2 * out.std_dev);
  // window-doubling convergence test for the fourth moment
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  const double m4_wide = central(4, c - 2.0 * h, c + 2.0 * h);
  if (std::fabs(m4_wide - m4) <= 1e-3 * std::fabs(m4_wide)) {
    out.kurtosis = m4_wide / (m2 * m2);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inverse-CDF sampling.  Each draw is quantile(u); a cached cumulative table
// (composite Simpson, mass-adaptive refinement) makes bulk draws cheap while
// keeping the inversion well inside the Monte Carlo noise floor.
// ---------------------------------------------------------------------------
class QuantileTable {
 public:
  explicit QuantileTable(const ThorneModel& m, std::size_t initial_cells = 4096,
                         double max_cell_mass = 2.5e-4)
      : model_(&m) {
    const auto [lo, hi] = detail::support_window(m);
    const double norm = m.normalization();
    x_.resize(initial_cells + 1);
    for (std::size_t i = 0; i <= initial_cells; ++i)
      x_[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(initial_cells);
    f_.resize(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i)
      f_[i] = m.pdf_unnormalized(x_[i]) / norm;
    // split any cell holding too much mass (Simpson estimate) until balanced
    for (int pass = 0; pass < 24; ++pass) {
      bool split_any = false;
      std::vector<double> nx, nf;
      nx.reserve(x_.size() * 2);
      nf.reserve(x_.size() * 2);
      for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
        nx.push_back(x_[i]);
        nf.push_back(f_[i]);
        const double mid = 0.5 * (x_[i] + x_[i + 1]);
        const double fm = m.pdf_unnormalized(mid) / norm;
        const double mass =
            (x_[i + 1] - x_[i]) / 6.0 * (f_[i] + 4.0 * fm + f_[i + 1]);
        if (mass > max_cell_mass) {
          nx.push_back(mid);
          nf.push_back(fm);
          split_any = true;
        }
      }
      nx.push_back(x_.back());
      nf.push_back(f_.back());
      x_.swap(nx);
      f_.swap(nf);
      if (!split_any) break;
    }
    // cumulative Simpson masses, then self-normalize so the table spans [0,1]
    cum_.assign(x_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
      const double mid = 0.5 * (x_[i] + x_[i + 1]);
      const double fm = m.pdf_unnormalized(mid) / norm;
      cum_[i + 1] = cum_[i] + (x_[i + 1] - x_[i]) / 6.0 * (f_[i] + 4.0 * fm + f_[i + 1]);
    }
    const double total = cum_.back();
    if (!(total > 0.0)) throw numerical_error("QuantileTable: zero total mass");
    for (auto& c : cum_) c /= total;
    for (auto& fv : f_) fv /= total;
  }

  double invert(double u) const {
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    std::size_t k = (it == cum_.begin())
                        ? 0
                        : static_cast<std::size_t>(it - cum_.begin()) - 1;
    k = std::min(k, cum_.size() - 2);
    const double h = x_[k + 1] - x_[k];
    const double target = u - cum_[k];
    const double f0 = f_[k];
    const double slope = (f_[k + 1] - f_[k]) / h;
    // solve f0*t + slope*t^2/2 = target for t in [0, h]
    double t;
    if (std::fabs(slope) * h < 1e-12 * std::max(f0, 1e-300)) {
      t = (f0 > 0.0) ? target / f0 : 0.5 * h;
    } else {
      const double disc = f0 * f0 + 2.0 * slope * target;
      t = (disc > 0.0) ? (std::sqrt(disc) - f0) / slope : 0.5 * h;
    }
    return x_[k] + std::clamp(t, 0.0, h);
  }

 private:
  const ThorneModel* model_;
  std::vector<double> x_, f_, cum_;
};

/// Deterministic inverse-CDF sampling: u ~ uniform(0,1), x = quantile(u).
inline std::vector<double> sample_variates(const ThorneModel& m,
                                           std::size_t count, std::uint64_t seed) {
  if (count < 1) throw config_error("sample_variates: count must be >= 1");
  const QuantileTable table(m);
  RandomStream rng(seed);
  std::vector<double> out(count);
  for (auto& x : out) x = table.invert(rng.uniform());
  return out;
}

// ---------------------------------------------------------------------------
// The family's normalizing constant for a single bump at unit scale, i.e.
// the integral of exp((1/sqrt(2 pi)) * exp(-x^2/2)) - 1 over the real line.
// ---------------------------------------------------------------------------
inline double thorne_constant() {
  static const double value = [] {
    const auto f = [](double x) {
      return std::expm1(inv_sqrt_two_pi * std::exp(-0.5 * x * x));
    };
    return integrate_line(f, 0.0, 1.0, 1e-12, 1e-300).value;
  }();
  return value;
}

/// Independent series form of the same constant:
/// sum_{k>=1} (2 pi)^((1-k)/2) k^(-1/2) / k!.
inline double thorne_constant_series() {
  double sum = 0.0;
  double kfact = 1.0;
  for (int k = 1; k <= 60; ++k) {
    kfact *= k;
    const double term =
        std::pow(2.0 * pi, 0.5 * (1.0 - k)) / (std::sqrt(static_cast<double>(k)) * kfact);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

/// Variant of the constant with the inner 1/sqrt(2 pi) factor omitted,
/// i.e. the integral of exp(exp(-x^2/2)) - 1.  Matches the widely quoted
/// 3.6972524805979... figure; reported for comparison, not used internally.
inline double thorne_constant_unit_amplitude_variant() {
  static const double value = [] {
    const auto f = [](double x) { return std::expm1(std::exp(-0.5 * x * x)); };
    return integrate_line(f, 0.0, 1.0, 1e-12, 1e-300).value;
  }();
  return value;
}

struct TruncatedModel {
  double mean = 0.0;
  double width = 1.0;
  double constant = 0.0;  ///< normalizing constant (unit-scale integral)

  TruncatedModel(double mu, double sigma) : mean(mu), width(sigma) {
    if (!(sigma > 0.0)) throw config_error("TruncatedModel: width must be > 0");
    constant = thorne_constant();
  }
};

/// Single-bump density: (1/(C*sigma)) * (exp((1/sqrt(2 pi)) e^{-z^2/2}) - 1).
inline double truncated_pdf(const TruncatedModel& t, double x) {
  const double z = (x - t.mean) / t.width;
  return std::expm1(inv_sqrt_two_pi * std::exp(-0.5 * z * z)) /
         (t.constant * t.width);
}

}  // namespace thorne
