// Small statistical toolbox: incomplete gamma / chi-square CDF, normal
// quantile, probabilists' Hermite polynomials, and sample summaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "thorne/common.hpp"

namespace thorne {

// ---------------------------------------------------------------------------
// Regularized incomplete gamma P(a, x) via series / continued fraction.
// ---------------------------------------------------------------------------
namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_cf(double a, double x) {
  // modified Lentz continued fraction for Q(a, x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
inline double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0 || !std::isfinite(x)) {
    if (x > 0 && !std::isfinite(x)) return 1.0;
    throw numerical_error("gamma_p: invalid arguments");
  }
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

/// Chi-square CDF with k degrees of freedom.
inline double chi_square_cdf(double x, double k) {
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * k, 0.5 * x);
}

/// Upper-tail quantile of the chi-square distribution (bisection on the CDF).
inline double chi_square_quantile(double p, double k) {
  if (!(p > 0.0 && p < 1.0)) throw numerical_error("chi_square_quantile: p out of range");
  double lo = 0.0, hi = k + 10.0;
  while (chi_square_cdf(hi, k) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi_square_cdf(mid, k) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Standard normal quantile: rational approximation refined by one Halley step
// against erfc, giving close to full double precision.
// ---------------------------------------------------------------------------
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw numerical_error("normal_quantile: p out of range");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // one Halley refinement
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

// ---------------------------------------------------------------------------
// Probabilists' Hermite polynomials He_n (for Gaussian-kernel derivatives).
// phi^(r)(x) = (-1)^r He_r(x) phi(x).
// ---------------------------------------------------------------------------
inline double hermite_e(int n, double x) {
  if (n == 0) return 1.0;
  if (n == 1) return x;
  double hm = 1.0, h = x;
  for (int k = 2; k <= n; ++k) {
    const double hn = x * h - (k - 1) * hm;
    hm = h;
    h = hn;
  }
  return h;
}

/// r-th derivative of the standard normal density at x.
inline double normal_pdf_derivative(int r, double x) {
  const double sign = (r % 2 == 0) ? 1.0 : -1.0;
  return sign * hermite_e(r, x) * normal_pdf(x);
}

// ---------------------------------------------------------------------------
// Sample summaries.
// ---------------------------------------------------------------------------
inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw data_error("mean: empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  if (v.size() < 2) throw data_error("variance: need at least two points");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double stddev(const std::vector<double>& v) { return std::sqrt(variance(v)); }

/// Linear-interpolation sample quantile (type 7), q in [0, 1].
inline double sample_quantile(std::vector<double> v, double q) {
  if (v.empty()) throw data_error("sample_quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw config_error("sample_quantile: q out of range");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline double interquartile_range(const std::vector<double>& v) {
  return sample_quantile(v, 0.75) - sample_quantile(v, 0.25);
}

/// Pearson correlation of two equally long vectors.
inline double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw data_error("correlation: need two equally sized samples");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Anderson-Darling statistic for standard normality of a (studentized)
/// sample, with the small-sample size correction applied.
inline double anderson_darling_normal(std::vector<double> z) {
  const std::size_t n = z.size();
  if (n < 8) throw data_error("anderson_darling_normal: sample too small");
  std::sort(z.begin(), z.end());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cdf_lo = std::clamp(normal_cdf(z[i]), 1e-300, 1.0 - 1e-16);
    const double cdf_hi = std::clamp(normal_cdf(z[n - 1 - i]), 1e-300, 1.0 - 1e-16);
    s += (2.0 * static_cast<double>(i) + 1.0) *
         (std::log(cdf_lo) + std::log1p(-cdf_hi));
  }
  const double a2 = -static_cast<double>(n) - s / static_cast<double>(n);
  return a2 * (1.0 + 0.75 / static_cast<double>(n) +
               2.25 / (static_cast<double>(n) * static_cast<double>(n)));
}

}  // namespace thorne
