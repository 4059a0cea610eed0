// Regularized density histogram: penalized Poisson log-likelihood on the
// log-density over an adaptive (asinh-spaced) grid, curvature penalty taken
// in the asinh coordinate with tail up-weighting, probability mass
// renormalized to exactly 1, and the penalty level chosen by a discrepancy
// rule (deviance driven to its expected value, with a knee guard for the
// small-sample regime where the expectation collapses along with the
// deviance).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "thorne/common.hpp"
#include "thorne/histogram.hpp"
#include "thorne/stats.hpp"

namespace thorne {

/// Tail-weighting controls for the curvature penalty.  `alpha` is the local
/// tail exponent (estimated from the data when absent); `onset` is the
/// distance from the median at which tail weighting begins on each side
/// (per-side 1%/99% quantiles of the data when absent).
struct TailWeightConfig {
  std::optional<double> alpha;
  std::optional<double> onset;
};

struct OptimizedHistogram : DensityHistogram {
  double alpha = 0.0;      ///< tail exponent used by the penalty
  double lambda = 0.0;     ///< selected penalty level
  double deviance = 0.0;   ///< Poisson deviance over occupied bins
  double edf = 0.0;        ///< effective degrees of freedom of the fit
};

namespace detail {

// --- symmetric pentadiagonal matrices (bandwidth 2), LDL^T factorization ---
struct Band2 {
  std::size_t m = 0;
  std::vector<double> d0, d1, d2;  // diagonal, first and second subdiagonals
  explicit Band2(std::size_t m_) : m(m_), d0(m_, 0.0), d1(m_, 0.0), d2(m_, 0.0) {}
  double max_abs() const {
    double v = 0.0;
    for (double x : d0) v = std::max(v, std::fabs(x));
    for (double x : d1) v = std::max(v, std::fabs(x));
    for (double x : d2) v = std::max(v, std::fabs(x));
    return v;
  }
  // y = A x
  std::vector<double> multiply(const std::vector<double>& x) const {
    std::vector<double> y(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      y[j] += d0[j] * x[j];
      if (j + 1 < m) {
        y[j + 1] += d1[j] * x[j];
        y[j] += d1[j] * x[j + 1];
      }
      if (j + 2 < m) {
        y[j + 2] += d2[j] * x[j];
        y[j] += d2[j] * x[j + 2];
      }
    }
    return y;
  }
  double quad_form(const std::vector<double>& x) const {
    double q = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      q += d0[j] * x[j] * x[j];
      if (j + 1 < m) q += 2.0 * d1[j] * x[j] * x[j + 1];
      if (j + 2 < m) q += 2.0 * d2[j] * x[j] * x[j + 2];
    }
    return q;
  }
};

struct Band2Ldlt {
  std::size_t m = 0;
  std::vector<double> d, l1, l2;
  bool factor(const Band2& a) {
    m = a.m;
    d.assign(m, 0.0);
    l1.assign(m, 0.0);
    l2.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      double dj = a.d0[j];
      if (j >= 1) dj -= l1[j - 1] * l1[j - 1] * d[j - 1];
      if (j >= 2) dj -= l2[j - 2] * l2[j - 2] * d[j - 2];
      if (!(dj > 0.0) || !std::isfinite(dj)) return false;
      d[j] = dj;
      if (j + 1 < m) {
        double v = a.d1[j];
        if (j >= 1) v -= l2[j - 1] * l1[j - 1] * d[j - 1];
        l1[j] = v / dj;
      }
      if (j + 2 < m) l2[j] = a.d2[j] / dj;
    }
    return true;
  }
  void solve_in_place(std::vector<double>& r) const {
    for (std::size_t j = 0; j < m; ++j) {
      if (j >= 1) r[j] -= l1[j - 1] * r[j - 1];
      if (j >= 2) r[j] -= l2[j - 2] * r[j - 2];
    }
    for (std::size_t j = 0; j < m; ++j) r[j] /= d[j];
    for (std::size_t j = m; j-- > 0;) {
      if (j + 1 < m) r[j] -= l1[j] * r[j + 1];
      if (j + 2 < m) r[j] -= l2[j] * r[j + 2];
    }
  }
};

/// Factor with an escalating ridge if the plain matrix is numerically
/// indefinite (near-singular when many bins carry mass ~ e^{-90}).
inline bool factor_with_fallback(Band2 a, Band2Ldlt& f) {
  if (f.factor(a)) return true;
  const double ridge = 1e-12 * a.max_abs() + 1e-300;
  for (std::size_t j = 0; j < a.m; ++j) a.d0[j] += ridge;
  return f.factor(a);
}

// --- adaptive grid: uniform in u = asinh((x - med)/s) ---
struct GridSpec {
  std::vector<double> edges;
  double median = 0.0;
};

inline std::vector<double> sorted_copy(const std::vector<double>& v) {
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  return s;
}

inline double sorted_quantile(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] * (1.0 - frac) + s[hi] * frac;
}

inline GridSpec build_grid(const std::vector<double>& sorted,
                           std::optional<std::size_t> m_core, double qcore,
                           bool symmetric) {
  const auto n = static_cast<double>(sorted.size());
  double lo = sorted.front(), hi = sorted.back();
  const double med = sorted_quantile(sorted, 0.5);
  if (symmetric) {
    const double half = std::max(hi - med, med - lo);
    lo = med - half;
    hi = med + half;
  }
  const double ql = sorted_quantile(sorted, qcore);
  const double qh = sorted_quantile(sorted, 1.0 - qcore);
  const double s = std::max(qh - med, med - ql);
  if (!(s > 0.0))
    throw data_error("optimized_histogram: degenerate data (no central spread)");
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  const double sig_rob =
      std::max(iqr / 1.349, 1e-12 * std::max(1.0, std::fabs(med)));
  const double dx_center = sig_rob * std::pow(n, -0.2);
  const double span = 1e-9 * std::max(1.0, std::fabs(hi - lo));
  const double ulo = std::asinh((lo - span - med) / s);
  const double uhi = std::asinh((hi + span - med) / s);
  std::size_t m;
  if (m_core) {
    m = *m_core;
  } else {
    const double raw = std::ceil((uhi - ulo) * s / dx_center);
    m = static_cast<std::size_t>(std::clamp(raw, 16.0, 450.0));
  }
  GridSpec g;
  g.median = med;
  g.edges.resize(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    const double u =
        ulo + (uhi - ulo) * static_cast<double>(i) / static_cast<double>(m);
    g.edges[i] = med + s * std::sinh(u);
  }
  return g;
}

// --- exact Poisson mean/variance of the unit deviance 2(c ln(c/mu)+mu-c) ---
inline double expected_unit_deviance(double mu) {
  if (mu > 30.0) return 1.0 + 1.0 / (6.0 * mu);
  if (mu < 1e-12) return 2.0 * mu;
  const int cmax = static_cast<int>(mu + 12.0 * std::sqrt(mu) + 25.0);
  double acc = std::exp(-mu) * mu;  // c = 0 term: mu * P(c=0), halved form below
  for (int c = 1; c <= cmax; ++c) {
    const double logp = c * std::log(mu) - mu - std::lgamma(c + 1.0);
    acc += std::exp(logp) * (c * std::log(c / mu) + mu - c);
  }
  return 2.0 * acc;
}

inline double variance_unit_deviance(double mu) {
  if (mu > 30.0) return 2.0;
  if (mu < 1e-12) return 0.0;
  const int cmax = static_cast<int>(mu + 12.0 * std::sqrt(mu) + 25.0);
  const double d0 = 2.0 * mu;
  double e1 = std::exp(-mu) * d0;
  double e2 = std::exp(-mu) * d0 * d0;
  for (int c = 1; c <= cmax; ++c) {
    const double logp = c * std::log(mu) - mu - std::lgamma(c + 1.0);
    const double p = std::exp(logp);
    const double dv = 2.0 * (c * std::log(c / mu) + mu - c);
    e1 += p * dv;
    e2 += p * dv * dv;
  }
  return std::max(e2 - e1 * e1, 0.0);
}

// --- penalized solver state ---
struct PenaltyProblem {
  std::size_t m = 0;
  double n = 0.0;
  std::vector<double> counts, widths;
  Band2 K{0};
  std::vector<bool> occupied;

  static constexpr double kThetaLo = -90.0;
  static constexpr double kThetaHi = 30.0;

  std::vector<double> mu_of(const std::vector<double>& theta) const {
    std::vector<double> mu(m);
    for (std::size_t j = 0; j < m; ++j)
      mu[j] = n * widths[j] * std::exp(theta[j]);
    return mu;
  }

  double objective(const std::vector<double>& theta, double lam) const {
    double lin = 0.0, mass = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      lin += counts[j] * theta[j];
      mass += widths[j] * std::exp(std::clamp(theta[j], kThetaLo, kThetaHi));
    }
    return lin - lam * K.quad_form(theta) - n * mass;
  }

  std::optional<std::vector<double>> solve(double lam,
                                           const std::vector<double>& theta0) const {
    std::vector<double> theta(m);
    for (std::size_t j = 0; j < m; ++j)
      theta[j] = std::clamp(theta0[j], kThetaLo, kThetaHi);
    Band2Ldlt f;
    for (int it = 0; it < 200; ++it) {
      const std::vector<double> mu = mu_of(theta);
      const std::vector<double> ktheta = K.multiply(theta);
      std::vector<double> grad(m);
      for (std::size_t j = 0; j < m; ++j)
        grad[j] = counts[j] - 2.0 * lam * ktheta[j] - mu[j];
      Band2 h = K;
      for (std::size_t j = 0; j < m; ++j) {
        h.d0[j] = 2.0 * lam * K.d0[j] + mu[j];
        h.d1[j] = 2.0 * lam * K.d1[j];
        h.d2[j] = 2.0 * lam * K.d2[j];
      }
      if (!factor_with_fallback(h, f)) return std::nullopt;
      std::vector<double> delta = grad;
      f.solve_in_place(delta);
      for (double v : delta)
        if (!std::isfinite(v)) return std::nullopt;
      double t = 1.0;
      const double g0 = objective(theta, lam);
      while (t > 1e-8) {
        std::vector<double> cand(m);
        for (std::size_t j = 0; j < m; ++j)
          cand[j] = std::clamp(theta[j] + t * delta[j], kThetaLo, kThetaHi);
        if (objective(cand, lam) > g0 - 1e-12) break;
        t *= 0.5;
      }
      double max_step = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double nj = std::clamp(theta[j] + t * delta[j], kThetaLo, kThetaHi);
        max_step = std::max(max_step, std::fabs(nj - theta[j]));
        theta[j] = nj;
      }
      if (max_step < 1e-10) break;
    }
    return theta;
  }

  double deviance(const std::vector<double>& theta) const {
    const std::vector<double> mu = mu_of(theta);
    double dev = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (!occupied[j]) continue;
      const double c = counts[j];
      const double t1 = c > 0.0 ? c * std::log(c / mu[j]) : 0.0;
      dev += t1 + mu[j] - c;
    }
    return 2.0 * dev;
  }

  /// Effective degrees of freedom: trace((2 lam K + diag(mu))^{-1} diag(mu)).
  double edf(const std::vector<double>& theta, double lam) const {
    const std::vector<double> mu = mu_of(theta);
    Band2 h = K;
    for (std::size_t j = 0; j < m; ++j) {
      h.d0[j] = 2.0 * lam * K.d0[j] + mu[j];
      h.d1[j] = 2.0 * lam * K.d1[j];
      h.d2[j] = 2.0 * lam * K.d2[j];
    }
    Band2Ldlt f;
    if (!factor_with_fallback(h, f)) return 0.0;
    double tr = 0.0;
    std::vector<double> col(m);
    for (std::size_t j = 0; j < m; ++j) {
      std::fill(col.begin(), col.end(), 0.0);
      col[j] = 1.0;
      f.solve_in_place(col);
      tr += col[j] * mu[j];
    }
    return tr;
  }

  /// Expected deviance of the penalized fit over occupied bins, and the
  /// one-sigma scale of the realized deviance around it.
  ///   target = sum_occ Edev_j * clip(1 - 2 S_jj + (S^2)_jj, 0),
  ///   S = (A + 2 lam K)^{-1} A with A = diag(mu).
  std::pair<double, double> deviance_target(const std::vector<double>& theta,
                                            double lam) const {
    const std::vector<double> mu = mu_of(theta);
    Band2 h = K;
    for (std::size_t j = 0; j < m; ++j) {
      h.d0[j] = 2.0 * lam * K.d0[j] + mu[j];
      h.d1[j] = 2.0 * lam * K.d1[j];
      h.d2[j] = 2.0 * lam * K.d2[j];
    }
    const double ridge = 1e-13 * h.max_abs();
    for (std::size_t j = 0; j < m; ++j) h.d0[j] += ridge;
    Band2Ldlt f;
    double tgt = 0.0, var = 0.0;
    if (factor_with_fallback(h, f)) {
      std::vector<double> col(m);
      for (std::size_t j = 0; j < m; ++j) {
        if (!occupied[j]) continue;
        std::fill(col.begin(), col.end(), 0.0);
        col[j] = 1.0;
        f.solve_in_place(col);  // col = H^{-1} e_j
        const double s1 = mu[j] * col[j];
        double s2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) s2 += mu[i] * col[i] * col[i];
        s2 *= mu[j];
        tgt += expected_unit_deviance(mu[j]) *
               std::max(1.0 - 2.0 * s1 + s2, 0.0);
        var += variance_unit_deviance(mu[j]);
      }
    }
    return {tgt, std::sqrt(var)};
  }
};

}  // namespace detail

/// Full-control variant of the optimized histogram.
inline OptimizedHistogram optimized_histogram_ex(
    const std::vector<double>& data, const TailWeightConfig& tail = {},
    std::optional<std::size_t> core_bins = std::nullopt, bool symmetric = false,
    double onset_quantile = 0.01) {
  using namespace detail;
  if (data.size() < 10)
    throw data_error("optimized_histogram: need at least 10 observations");
  for (double x : data)
    if (!std::isfinite(x))
      throw data_error("optimized_histogram: nonfinite observation");
  const std::vector<double> sorted = sorted_copy(data);
  const double n = static_cast<double>(data.size());
  const GridSpec grid = build_grid(sorted, core_bins, 0.01, symmetric);
  const std::vector<double>& edges = grid.edges;
  const double med = grid.median;
  const std::size_t m = edges.size() - 1;

  // counts + within-bin observation centroids
  std::vector<double> counts(m, 0.0), sums(m, 0.0);
  for (double x : data) {
    if (x < edges.front() || x > edges.back()) continue;
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    std::size_t k = (it == edges.begin())
                        ? 0
                        : static_cast<std::size_t>(it - edges.begin()) - 1;
    k = std::min(k, m - 1);
    counts[k] += 1.0;
    sums[k] += x;
  }
  std::vector<double> widths(m), centers(m), reps(m);
  for (std::size_t j = 0; j < m; ++j) {
    widths[j] = edges[j + 1] - edges[j];
    centers[j] = 0.5 * (edges[j] + edges[j + 1]);
    reps[j] = counts[j] > 0.0 ? sums[j] / counts[j] : centers[j];
  }

  // tail onsets and local tail exponent
  double onset_lo, onset_hi;
  if (tail.onset) {
    if (!(*tail.onset > 0.0))
      throw config_error("optimized_histogram: tail onset distance must be > 0");
    onset_lo = med - *tail.onset;
    onset_hi = med + *tail.onset;
  } else {
    onset_lo = sorted_quantile(sorted, onset_quantile);
    onset_hi = sorted_quantile(sorted, 1.0 - onset_quantile);
  }
  double alpha;
  if (tail.alpha) {
    if (!(*tail.alpha > 0.0))
      throw config_error("optimized_histogram: tail alpha must be > 0");
    alpha = *tail.alpha;
  } else {
    // Hill-type estimate on the upper/lower 2% order statistics
    const auto k = std::max<std::size_t>(5, static_cast<std::size_t>(0.02 * n));
    double acc = 0.0;
    int sides = 0;
    for (int side = 0; side < 2; ++side) {
      std::vector<double> exc;
      for (double x : data) {
        const double e = side == 0 ? x - med : med - x;
        if (e > 0.0) exc.push_back(e);
      }
      std::sort(exc.begin(), exc.end(), std::greater<>());
      if (exc.size() > k && exc[k] > 0.0) {
        double lg = 0.0;
        for (std::size_t i = 0; i < k; ++i) lg += std::log(exc[i] / exc[k]);
        lg /= static_cast<double>(k);
        if (lg > 0.0) {
          acc += 1.0 / lg;
          ++sides;
        }
      }
    }
    alpha = sides > 0 ? acc / sides : 2.0;
  }

  // curvature penalty in u = asinh((x - med)/s_u): its null space holds both
  // the exponential center (locally ~linear) and power-law tails (linear)
  const double s_u = std::max(onset_hi - med, med - onset_lo);
  std::vector<double> u(m);
  for (std::size_t j = 0; j < m; ++j) u[j] = std::asinh((centers[j] - med) / s_u);

  detail::PenaltyProblem prob;
  prob.m = m;
  prob.n = n;
  prob.counts = counts;
  prob.widths = widths;
  prob.K = detail::Band2(m);
  const double dl = std::fabs(onset_lo - med), dh = std::fabs(onset_hi - med);
  for (std::size_t r = 1; r + 1 < m; ++r) {
    const double h0 = u[r] - u[r - 1], h1 = u[r + 1] - u[r];
    const double a = 2.0 / (h0 * (h0 + h1));
    const double b = -2.0 / (h0 * h1);
    const double c = 2.0 / (h1 * (h0 + h1));
    const double sc = 0.5 * (h0 + h1);
    double om = 1.0;
    const double x = centers[r];
    const double d = std::fabs(x - med);
    if (x < onset_lo && dl > 0.0) om = std::pow(d / dl, 1.0 + alpha);
    else if (x > onset_hi && dh > 0.0) om = std::pow(d / dh, 1.0 + alpha);
    const double w = om * sc;
    prob.K.d0[r - 1] += w * a * a;
    prob.K.d0[r] += w * b * b;
    prob.K.d0[r + 1] += w * c * c;
    prob.K.d1[r - 1] += w * a * b;
    prob.K.d1[r] += w * b * c;
    prob.K.d2[r - 1] += w * a * c;
  }
  prob.occupied.resize(m);
  for (std::size_t j = 0; j < m; ++j) prob.occupied[j] = counts[j] >= 5.0;

  std::vector<double> theta0(m);
  for (std::size_t j = 0; j < m; ++j)
    theta0[j] = std::log(std::max(counts[j], 0.5) / (n * widths[j]));

  // ---- penalty-level scan: toleranced discrepancy + knee guard ----
  // Scanning from the smooth end, the occupied-bin deviance plunges toward
  // its expectation as lambda falls.  A zero crossing of
  //     h(lambda) = deviance - (target + tol)
  // is honored only while the plunge is decisive (>= 2 tol per decade); once
  // the curve flattens below that rate while already within 10 tol of the
  // target, further roughening buys only noise and the smoother end of the
  // flat segment is chosen instead.
  double lam = -1.0;
  std::vector<double> theta;
  struct Prev {
    double ll, dev, tgt, tol;
    std::vector<double> theta;
  };
  std::optional<Prev> prev;
  std::optional<std::tuple<double, double, std::vector<double>>> bracket;
  std::optional<std::pair<double, std::vector<double>>> last_good;
  std::vector<double> th_walk = theta0;
  for (double ll = 9.0; ll >= -6.0; ll -= 1.0) {
    auto t = prob.solve(std::pow(10.0, ll), th_walk);
    if (t) {
      const double dv = prob.deviance(*t);
      const auto [tgt, tol] = prob.deviance_target(*t, std::pow(10.0, ll));
      th_walk = *t;
      const double hcur = dv - (tgt + tol);
      if (!prev && hcur <= 0.0 && ll >= 9.0) {
        lam = std::pow(10.0, ll);  // consistent with maximal smoothness
        theta = *t;
        break;
      }
      if (prev) {
        const double slope = prev->dev - dv;  // deviance drop this decade
        const double thr = 2.0 * tol;
        if (slope < thr && hcur <= 10.0 * tol) {
          lam = std::pow(10.0, prev->ll);  // knee: stay at the smoother end
          theta = prev->theta;
          break;
        }
        if (hcur <= 0.0 && slope >= thr) {
          bracket = {ll, prev->ll, *t};
          break;
        }
      }
      prev = Prev{ll, dv, tgt, tol, *t};
      last_good = {ll, *t};
    }
  }
  if (lam < 0.0 && bracket) {
    auto [a, b, tcur] = *bracket;  // h(a) <= 0 < h(b), a < b
    for (int i = 0; i < 40; ++i) {
      const double mid = 0.5 * (a + b);
      auto tm = prob.solve(std::pow(10.0, mid), tcur);
      bool above = true;
      if (tm) {
        const double dv = prob.deviance(*tm);
        const auto [tgt, tol] = prob.deviance_target(*tm, std::pow(10.0, mid));
        above = dv - (tgt + tol) > 0.0;
      }
      if (above) {
        b = mid;
      } else {
        a = mid;
        tcur = *tm;
      }
      if (b - a < 0.01) break;
    }
    lam = std::pow(10.0, 0.5 * (a + b));
    auto t = prob.solve(lam, tcur);
    if (!t)
      throw numerical_error("optimized_histogram: final solve failed to converge");
    theta = *t;
  }
  if (lam < 0.0) {
    // scan exhausted without a decision (numerically extreme input)
    const double ll_fb = last_good ? last_good->first : -6.0;
    lam = std::pow(10.0, ll_fb);
    if (last_good) {
      theta = last_good->second;
    } else {
      auto t = prob.solve(lam, theta0);
      if (!t)
        throw numerical_error(
            "optimized_histogram: solver failed at every penalty level");
      theta = *t;
    }
  }

  OptimizedHistogram out;
  out.edges = edges;
  out.counts = counts;
  out.representatives = reps;
  out.sample_count = data.size();
  out.densities.resize(m);
  double mass = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    out.densities[j] = std::exp(theta[j]);
    mass += out.densities[j] * widths[j];
  }
  for (std::size_t j = 0; j < m; ++j) out.densities[j] /= mass;
  out.normalized = true;
  out.alpha = alpha;
  out.lambda = lam;
  out.deviance = prob.deviance(theta);
  out.edf = prob.edf(theta, lam);
  return out;
}

/// Penalized (tail-weighted, probability-conserving) density histogram.
inline OptimizedHistogram optimized_histogram(const std::vector<double>& data,
                                              const TailWeightConfig& tail = {}) {
  return optimized_histogram_ex(data, tail);
}

}  // namespace thorne
