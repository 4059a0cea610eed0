// Histogram log transform, damped nonlinear least-squares fitting of the
// weighted-Gaussian log-sum, incremental component addition selected by the
// regression F statistic, back-transformation, and fit diagnostics.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "thorne/common.hpp"
#include "thorne/histogram.hpp"
#include "thorne/model.hpp"
#include "thorne/stats.hpp"

namespace thorne {

struct TransformedHistogram {
  std::vector<double> centers;    ///< per-bin abscissae (observation centroids)
  std::vector<double> ordinates;  ///< ln(density/d_min + 1) >= 0
  std::vector<double> widths;
  std::vector<double> source_densities;
  double d_min = 0.0;  ///< smallest positive density of the source histogram
  std::size_t sample_count = 0;
  bool source_normalized = false;
};

/// Log transform of a density histogram about its smallest positive density.
inline TransformedHistogram transform_histogram(const DensityHistogram& h) {
  double dmin = std::numeric_limits<double>::infinity();
  for (double d : h.densities)
    if (d > 0.0) dmin = std::min(dmin, d);
  if (!std::isfinite(dmin))
    throw data_error("transform_histogram: histogram has no positive density");
  TransformedHistogram t;
  t.centers = h.representatives.empty() ? h.centers() : h.representatives;
  t.widths = h.widths();
  t.source_densities = h.densities;
  t.d_min = dmin;
  t.sample_count = h.sample_count;
  t.source_normalized = h.normalized;
  t.ordinates.resize(h.densities.size());
  for (std::size_t i = 0; i < h.densities.size(); ++i)
    t.ordinates[i] =
        h.densities[i] > 0.0 ? std::log(h.densities[i] / dmin + 1.0) : 0.0;
  return t;
}

/// Back-transformed density: (exp(curve(x)) - 1) * d_min, optionally
/// renormalized (which makes it the fitted model's own normalized pdf).
struct BackTransform {
  ThorneModel model;
  double d_min = 1.0;
  bool renormalize = true;
  double operator()(double x) const {
    return renormalize ? model.pdf(x) : d_min * model.pdf_unnormalized(x);
  }
};

struct NormalityReport {
  double statistic = 0.0;    ///< Anderson-Darling A*^2 (size-corrected)
  double p_value = 0.0;
  double npp_correlation = 0.0;  ///< normal-probability-plot correlation
  bool verdict = false;          ///< true when not rejected at the 5% level
};

struct LadderStep {
  std::size_t n_components = 0;
  double r2 = 0.0;
  double f_statistic = 0.0;
  double sse = 0.0;
};

struct FitReport {
  ThorneModel model;
  std::size_t n_components = 0;
  double r2 = 0.0;
  double r2_adjusted = 0.0;
  double std_error = 0.0;
  double f_statistic = 0.0;
  double sse = 0.0;
  double ise_transformed = 0.0;  ///< sum of squared residuals * bin widths
  double ise_density = 0.0;      ///< vs the source histogram densities
  double d_min = 0.0;
  std::vector<double> t_stats;   ///< per free parameter; empty if unavailable
  std::vector<double> residuals;
  NormalityReport normality;
  bool converged = false;
  bool ill_conditioned = false;
  std::vector<LadderStep> ladder;
};

struct FitOptions {
  bool symmetric = true;           ///< all component means fixed at 0
  std::size_t max_components = 10;
  int max_iterations = 400;
};

namespace fitdetail {

inline std::size_t params_per_component(bool sym) { return sym ? 2 : 3; }

/// S(x) for packed parameters [log w, (mu,) log s] per component.
inline double eval_logsum(const Eigen::VectorXd& p, bool sym, double x) {
  const std::size_t k = params_per_component(sym);
  const auto nc = static_cast<std::size_t>(p.size()) / k;
  double s = 0.0;
  for (std::size_t i = 0; i < nc; ++i) {
    const double w = std::exp(p[static_cast<Eigen::Index>(k * i)]);
    const double mu = sym ? 0.0 : p[static_cast<Eigen::Index>(k * i + 1)];
    const double sig = std::exp(p[static_cast<Eigen::Index>(k * i + k - 1)]);
    const double z = (x - mu) / sig;
    s += w / sig * normal_pdf(z);
  }
  return s;
}

inline void fill_jacobian_row(const Eigen::VectorXd& p, bool sym, double x,
                              Eigen::MatrixXd& jac, Eigen::Index row) {
  const std::size_t k = params_per_component(sym);
  const auto nc = static_cast<std::size_t>(p.size()) / k;
  for (std::size_t i = 0; i < nc; ++i) {
    const auto base = static_cast<Eigen::Index>(k * i);
    const double w = std::exp(p[base]);
    const double mu = sym ? 0.0 : p[base + 1];
    const double sig = std::exp(p[base + static_cast<Eigen::Index>(k) - 1]);
    const double z = (x - mu) / sig;
    const double g = w / sig * normal_pdf(z);
    jac(row, base) = g;  // d/d log w
    if (!sym) jac(row, base + 1) = g * z / sig;              // d/d mu
    jac(row, base + static_cast<Eigen::Index>(k) - 1) =
        g * (z * z - 1.0);                                    // d/d log s
  }
}

struct LmResult {
  Eigen::VectorXd params;
  double sse = 0.0;
  bool converged = false;
  int iterations = 0;
  Eigen::MatrixXd jacobian;  // at the solution
};

/// Damped (Levenberg-Marquardt) least squares of S(x_i; p) against y_i.
inline LmResult lm_minimize(const std::vector<double>& x,
                            const std::vector<double>& y,
                            const Eigen::VectorXd& init, bool sym,
                            int max_iterations) {
  const auto m = static_cast<Eigen::Index>(x.size());
  const Eigen::Index np = init.size();
  Eigen::VectorXd p = init;
  Eigen::VectorXd r(m);
  Eigen::MatrixXd jac(m, np);
  const auto residuals_at = [&](const Eigen::VectorXd& q, Eigen::VectorXd& out) {
    double sse = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      out[i] = eval_logsum(q, sym, x[static_cast<std::size_t>(i)]) -
               y[static_cast<std::size_t>(i)];
      sse += out[i] * out[i];
    }
    return sse;
  };
  double sse = residuals_at(p, r);
  double damping = 1e-3;
  LmResult res;
  int it = 0;
  for (; it < max_iterations; ++it) {
    for (Eigen::Index i = 0; i < m; ++i)
      fill_jacobian_row(p, sym, x[static_cast<std::size_t>(i)], jac, i);
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    bool accepted = false;
    double new_sse = sse;
    Eigen::VectorXd p_new = p, r_new = r;
    for (int inner = 0; inner < 40; ++inner) {
      Eigen::MatrixXd a_damped = a;
      for (Eigen::Index j = 0; j < np; ++j)
        a_damped(j, j) += damping * std::max(a(j, j), 1e-12);
      const Eigen::VectorXd delta = a_damped.ldlt().solve(-g);
      if (!delta.allFinite()) {
        damping *= 10.0;
        continue;
      }
      if (delta.norm() < 1e-12 * (1.0 + p.norm())) {
        res.converged = true;  // stationary: proposed step is negligible
        break;
      }
      p_new = p + delta;
      new_sse = residuals_at(p_new, r_new);
      if (std::isfinite(new_sse) && new_sse <= sse) {
        accepted = true;
        damping = std::max(damping * 0.3, 1e-12);
        break;
      }
      damping = std::min(damping * 10.0, 1e14);
    }
    if (!accepted) {
      // either stationary (flagged above) or no descent at any damping;
      // at extreme damping the step is ~ -g/damping, so treat as converged
      if (!res.converged && damping >= 1e14) res.converged = true;
      break;
    }
    const double rel_decrease = (sse - new_sse) / std::max(sse, 1e-300);
    const double step_norm = (p_new - p).norm();
    p = p_new;
    r = r_new;
    sse = new_sse;
    if (rel_decrease < 1e-12 || step_norm < 1e-10) {
      res.converged = true;
      break;
    }
  }
  for (Eigen::Index i = 0; i < m; ++i)
    fill_jacobian_row(p, sym, x[static_cast<std::size_t>(i)], jac, i);
  res.params = p;
  res.sse = sse;
  res.iterations = it + 1;
  res.jacobian = jac;
  return res;
}

inline std::vector<ComponentGaussian> params_to_components(
    const Eigen::VectorXd& p, bool sym) {
  const std::size_t k = params_per_component(sym);
  const auto nc = static_cast<std::size_t>(p.size()) / k;
  std::vector<ComponentGaussian> comps(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    const auto base = static_cast<Eigen::Index>(k * i);
    comps[i].weight = std::exp(p[base]);
    comps[i].mean = sym ? 0.0 : p[base + 1];
    comps[i].width = std::exp(p[base + static_cast<Eigen::Index>(k) - 1]);
  }
  return comps;
}

inline Eigen::VectorXd components_to_params(
    const std::vector<ComponentGaussian>& comps, bool sym) {
  const std::size_t k = params_per_component(sym);
  Eigen::VectorXd p(static_cast<Eigen::Index>(k * comps.size()));
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto base = static_cast<Eigen::Index>(k * i);
    if (!(comps[i].weight > 0.0) || !(comps[i].width > 0.0))
      throw config_error("fit: initial components need positive weight/width");
    p[base] = std::log(comps[i].weight);
    if (!sym) p[base + 1] = comps[i].mean;
    p[base + static_cast<Eigen::Index>(k) - 1] = std::log(comps[i].width);
  }
  return p;
}

/// r^2 and the regression F statistic for p free parameters on m bins.
inline std::tuple<double, double> r2_and_f(const std::vector<double>& y,
                                           double sse, std::size_t p) {
  const double ybar = mean(y);
  double sst = 0.0;
  for (double v : y) sst += (v - ybar) * (v - ybar);
  if (!(sst > 0.0)) throw data_error("fit: degenerate ordinates (zero variance)");
  const double r2 = 1.0 - sse / sst;
  const auto m = static_cast<double>(y.size());
  const auto pd = static_cast<double>(p);
  const double f =
      (r2 / pd) / ((1.0 - r2) / (m - pd - 1.0));
  return {r2, f};
}

inline NormalityReport normality_of(const std::vector<double>& residuals) {
  NormalityReport rep;
  rep.statistic = std::numeric_limits<double>::quiet_NaN();
  rep.p_value = std::numeric_limits<double>::quiet_NaN();
  if (residuals.size() < 8) return rep;  // too few bins for a verdict
  const double mu = mean(residuals);
  const double sd = stddev(residuals);
  if (!(sd > 0.0) || !std::isfinite(sd)) return rep;  // degenerate residuals
  std::vector<double> z(residuals.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (residuals[i] - mu) / sd;
  std::vector<double> zs = z;
  std::sort(zs.begin(), zs.end());
  const auto n = static_cast<double>(zs.size());
  std::vector<double> q(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i)
    q[i] = normal_quantile((static_cast<double>(i) + 1.0 - 0.375) / (n + 0.25));
  rep.npp_correlation = correlation(zs, q);
  rep.statistic = anderson_darling_normal(z);
  const double a = rep.statistic;
  if (a >= 0.6) {
    rep.p_value = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
  } else if (a > 0.34) {
    rep.p_value = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
  } else if (a > 0.2) {
    rep.p_value = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
  } else {
    rep.p_value = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
  }
  rep.p_value = std::clamp(rep.p_value, 0.0, 1.0);
  rep.verdict = rep.p_value >= 0.05;
  return rep;
}

inline FitReport make_report(const TransformedHistogram& th, const LmResult& lm,
                             bool sym) {
  FitReport rep;
  const std::size_t k = params_per_component(sym);
  const auto p = static_cast<std::size_t>(lm.params.size());
  rep.n_components = p / k;
  rep.converged = lm.converged;
  rep.sse = lm.sse;
  rep.d_min = th.d_min;
  const auto m = th.centers.size();
  rep.residuals.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    rep.residuals[i] =
        eval_logsum(lm.params, sym, th.centers[i]) - th.ordinates[i];
  const auto [r2, f] = r2_and_f(th.ordinates, lm.sse, p);
  rep.r2 = std::clamp(r2, 0.0, 1.0);
  rep.f_statistic = f;
  const double md = static_cast<double>(m), pd = static_cast<double>(p);
  rep.r2_adjusted = 1.0 - (1.0 - rep.r2) * (md - 1.0) / (md - pd - 1.0);
  rep.std_error = std::sqrt(lm.sse / (md - pd - 1.0));
  rep.ise_transformed = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    rep.ise_transformed += rep.residuals[i] * rep.residuals[i] * th.widths[i];
  // t statistics from the linearized covariance sigma^2 (J^T J)^{-1}.
  // Log-reparameterized weight/width parameters make t = estimate/stderr on
  // the original scale equal to 1/stderr(log-parameter).
  const Eigen::MatrixXd a = lm.jacobian.transpose() * lm.jacobian;
  const double sigma2 = lm.sse / (md - pd - 1.0);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    const Eigen::MatrixXd cov =
        sigma2 * ldlt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
    rep.t_stats.resize(p);
    bool ok = true;
    for (std::size_t j = 0; j < p; ++j) {
      const double var = cov(static_cast<Eigen::Index>(j),
                             static_cast<Eigen::Index>(j));
      if (!(var > 0.0) || !std::isfinite(var)) {
        ok = false;
        break;
      }
      const double sd = std::sqrt(var);
      const bool is_mean_param = !sym && (j % k == 1);
      rep.t_stats[j] = is_mean_param
                           ? std::fabs(lm.params[static_cast<Eigen::Index>(j)]) / sd
                           : 1.0 / sd;
    }
    if (!ok) {
      rep.t_stats.clear();
      rep.ill_conditioned = true;
    }
  } else {
    rep.ill_conditioned = true;
  }
  rep.normality = normality_of(rep.residuals);
  rep.model = ThorneModel(params_to_components(lm.params, sym),
                          /*enforce_monotone_weights=*/false);
  // ISE against the source histogram's own densities (back-transformed fit);
  // only meaningful when the transform kept them
  rep.ise_density = 0.0;
  if (th.source_densities.size() == m) {
    for (std::size_t i = 0; i < m; ++i) {
      const double fd =
          th.source_normalized
              ? rep.model.pdf(th.centers[i])
              : th.d_min * rep.model.pdf_unnormalized(th.centers[i]);
      const double diff = fd - th.source_densities[i];
      rep.ise_density += diff * diff * th.widths[i];
    }
  }
  return rep;
}

inline Eigen::VectorXd initial_params(const TransformedHistogram& th, bool sym) {
  const auto& x = th.centers;
  const auto& y = th.ordinates;
  std::size_t imax = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] > y[imax]) imax = i;
  const double ymax = y[imax];
  // full width at half maximum of the ordinate curve
  std::size_t first = y.size(), last = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] >= 0.5 * ymax) {
      first = std::min(first, i);
      last = std::max(last, i);
    }
  }
  const double width =
      std::max(x[last] - x[first], x[1] - x[0]);
  const double s0 = width / 2.355;
  const double w0 = ymax * s0 * sqrt_two_pi;
  Eigen::VectorXd p(sym ? 2 : 3);
  p[0] = std::log(w0);
  if (sym) {
    p[1] = std::log(s0);
  } else {
    p[1] = x[imax];
    p[2] = std::log(s0);
  }
  return p;
}

}  // namespace fitdetail

/// Least-squares fit with a fixed component count from an explicit initial
/// component list.
inline FitReport fit_fixed_n(const TransformedHistogram& th, std::size_t n,
                             const std::vector<ComponentGaussian>& init,
                             const FitOptions& opts = {}) {
  if (n < 1) throw config_error("fit_fixed_n: n must be >= 1");
  if (init.size() != n)
    throw config_error("fit_fixed_n: init must supply exactly n components");
  const Eigen::VectorXd p0 =
      fitdetail::components_to_params(init, opts.symmetric);
  const fitdetail::LmResult lm = fitdetail::lm_minimize(
      th.centers, th.ordinates, p0, opts.symmetric, opts.max_iterations);
  return fitdetail::make_report(th, lm, opts.symmetric);
}

namespace fitdetail {

/// Shared ladder: fit n = 1, 2, ... extending the previous best fit with a
/// narrower (width/3, weight/5) or broader (width*3, weight*2.5) component,
/// keeping the larger-F candidate.  Stops after two consecutive F declines,
/// a component-count cap, or parameter exhaustion; `force_n` disables the
/// early stop and runs the ladder up to exactly n components.
inline FitReport run_ladder(const TransformedHistogram& th,
                            const FitOptions& opts,
                            std::optional<std::size_t> force_n) {
  if (th.centers.size() < 7)
    throw data_error("auto_fit: need at least 7 bins");
  const bool sym = opts.symmetric;
  const std::size_t k = params_per_component(sym);
  const std::size_t max_n = force_n ? *force_n : opts.max_components;
  std::vector<LmResult> fits;
  std::vector<LadderStep> steps;
  double last_f = -std::numeric_limits<double>::infinity();
  int decline = 0;
  for (std::size_t n = 1;
       n <= max_n && k * n + 2 <= th.centers.size() - 1; ++n) {
    LmResult lm;
    if (n == 1) {
      lm = lm_minimize(th.centers, th.ordinates, initial_params(th, sym), sym,
                       opts.max_iterations);
    } else {
      const Eigen::VectorXd& prev = fits.back().params;
      double wmin = std::numeric_limits<double>::infinity(), wmax = 0.0;
      double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
      const auto nc = static_cast<std::size_t>(prev.size()) / k;
      for (std::size_t i = 0; i < nc; ++i) {
        const double w = std::exp(prev[static_cast<Eigen::Index>(k * i)]);
        const double s =
            std::exp(prev[static_cast<Eigen::Index>(k * i + k - 1)]);
        wmin = std::min(wmin, w);
        wmax = std::max(wmax, w);
        smin = std::min(smin, s);
        smax = std::max(smax, s);
      }
      const auto extend = [&](double w, double s) {
        Eigen::VectorXd q(prev.size() + static_cast<Eigen::Index>(k));
        q.head(prev.size()) = prev;
        q[prev.size()] = std::log(w);
        if (!sym) q[prev.size() + 1] = 0.0;
        q[q.size() - 1] = std::log(s);
        return q;
      };
      const LmResult narrow = lm_minimize(th.centers, th.ordinates,
                                          extend(wmin / 5.0, smin / 3.0), sym,
                                          opts.max_iterations);
      const LmResult broad = lm_minimize(th.centers, th.ordinates,
                                         extend(wmax * 2.5, smax * 3.0), sym,
                                         opts.max_iterations);
      const auto f_of = [&](const LmResult& r) {
        return std::get<1>(r2_and_f(th.ordinates, r.sse, k * n));
      };
      lm = f_of(narrow) >= f_of(broad) ? narrow : broad;
    }
    fits.push_back(lm);
    const auto [r2, f] = r2_and_f(th.ordinates, lm.sse, k * n);
    steps.push_back({n, r2, f, lm.sse});
    if (!force_n) {
      if (f < last_f) {
        if (++decline >= 2) break;
      } else {
        decline = 0;
      }
      last_f = f;
    }
  }
  if (fits.empty())
    throw data_error("auto_fit: no component count could be attempted "
                     "(too few bins)");
  std::size_t best = 0;
  if (force_n) {
    if (steps.back().n_components != *force_n)
      throw data_error("fit_fixed_n: too few bins for the requested "
                       "component count");
    best = fits.size() - 1;
  } else {
    for (std::size_t i = 1; i < steps.size(); ++i)
      if (steps[i].f_statistic > steps[best].f_statistic) best = i;
  }
  FitReport rep = make_report(th, fits[best], sym);
  rep.ladder = steps;
  return rep;
}

}  // namespace fitdetail

/// Ladder fit to exactly n components, seeded like auto_fit.
inline FitReport fit_fixed_n(const TransformedHistogram& th, std::size_t n,
                             const FitOptions& opts = {}) {
  if (n < 1) throw config_error("fit_fixed_n: n must be >= 1");
  return fitdetail::run_ladder(th, opts, n);
}

/// Incremental component addition with F-statistic model selection: fits
/// n = 1, 2, 3, ... and returns the report with maximal F after the
/// statistic has declined for two consecutive component counts.
inline FitReport auto_fit(const TransformedHistogram& th,
                          const FitOptions& opts = {}) {
  return fitdetail::run_ladder(th, opts, std::nullopt);
}

/// Analytic gradient of the least-squares objective sum (S(x_i;p) - y_i)^2,
/// exposed for verification against finite differences.
inline std::vector<double> objective_gradient(const std::vector<double>& x,
                                              const std::vector<double>& y,
                                              const std::vector<double>& params,
                                              bool symmetric) {
  const auto np = static_cast<Eigen::Index>(params.size());
  Eigen::VectorXd p(np);
  for (Eigen::Index i = 0; i < np; ++i) p[i] = params[static_cast<std::size_t>(i)];
  const auto m = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd jac(m, np);
  Eigen::VectorXd r(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    r[i] = fitdetail::eval_logsum(p, symmetric, xi) -
           y[static_cast<std::size_t>(i)];
    fitdetail::fill_jacobian_row(p, symmetric, xi, jac, i);
  }
  const Eigen::VectorXd g = 2.0 * jac.transpose() * r;
  std::vector<double> out(params.size());
  for (Eigen::Index i = 0; i < np; ++i) out[static_cast<std::size_t>(i)] = g[i];
  return out;
}

/// Objective value for the same parameter packing (for gradient checks).
inline double objective_value(const std::vector<double>& x,
                              const std::vector<double>& y,
                              const std::vector<double>& params,
                              bool symmetric) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    p[static_cast<Eigen::Index>(i)] = params[i];
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = fitdetail::eval_logsum(p, symmetric, x[i]) - y[i];
    sse += r * r;
  }
  return sse;
}

}  // namespace thorne
