// Adaptive Gauss-Kronrod quadrature over finite intervals, plus a whole-line
// integrator that extends its window until the integrand has decayed to
// 1e-15 of its observed peak (so rapidly-decaying but wide-support integrands
// are never silently truncated).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <vector>

#include "thorne/common.hpp"

namespace thorne {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;       ///< accumulated absolute error estimate
  bool converged = false;
  std::size_t evaluations = 0;
};

namespace detail {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule,
// on [-1, 1].  Positive half; nodes are symmetric.
inline constexpr double kronrod_nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double kronrod_weights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
// Gauss weights attach to kronrod nodes 1, 3, 5, 7 (the G7 subset).
inline constexpr double gauss_weights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename F>
inline void gk15(const F& f, double a, double b, double* value, double* error) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double resk = 0.0;
  double resg = 0.0;
  for (int j = 0; j < 8; ++j) {
    const double x = h * kronrod_nodes[j];
    const double f1 = f(c - x);
    const double f2 = (j == 7) ? 0.0 : f(c + x);
    const double fsum = (j == 7) ? f1 : f1 + f2;
    resk += kronrod_weights[j] * fsum;
    if (j % 2 == 1) resg += gauss_weights[j / 2] * fsum;  // G7 = odd Kronrod nodes + midpoint
  }
  *value = resk * h;
  *error = std::fabs((resk - resg) * h);
}

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

}  // namespace detail

/// Adaptive quadrature of f over [a, b] to the requested tolerances.
template <typename F>
inline QuadratureResult integrate(const F& f, double a, double b,
                                  double rel_tol = 1e-10, double abs_tol = 1e-14,
                                  std::size_t max_segments = 4000) {
  QuadratureResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<detail::Segment> heap;
  double value, error;
  detail::gk15(f, a, b, &value, &error);
  out.evaluations = 15;
  heap.push({a, b, value, error});
  double total = value;
  double total_err = error;
  while (total_err > std::max(abs_tol, rel_tol * std::fabs(total)) &&
         heap.size() < max_segments) {
    detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // interval at floating-point resolution; cannot refine further
      heap.push(worst);
      break;
    }
    double v1, e1, v2, e2;
    detail::gk15(f, worst.a, mid, &v1, &e1);
    detail::gk15(f, mid, worst.b, &v2, &e2);
    out.evaluations += 30;
    total += v1 + v2 - worst.value;
    total_err += e1 + e2 - worst.error;
    heap.push({worst.a, mid, v1, e1});
    heap.push({mid, worst.b, v2, e2});
  }
  out.value = total;
  out.error = std::fabs(total_err);
  out.converged =
      out.error <= std::max(abs_tol, 10.0 * rel_tol * std::fabs(total)) + 1e-300;
  return out;
}

/// Window for whole-line integration of a decaying integrand: expands
/// symmetrically about `center` until |f| at both endpoints is below
/// `decay` times the peak |f| seen on the probe grid.
template <typename F>
inline std::pair<double, double> auto_window(const F& f, double center,
                                             double scale, double decay = 1e-15,
                                             double max_half_width = 1e12) {
  double half = std::max(scale, 1e-12) * 8.0;
  double peak = 0.0;
  for (int i = -16; i <= 16; ++i) {
    peak = std::max(peak, std::fabs(f(center + half * i / 16.0)));
  }
  while (half < max_half_width) {
    const double fl = std::fabs(f(center - half));
    const double fr = std::fabs(f(center + half));
    peak = std::max({peak, fl, fr});
    if (fl <= decay * peak && fr <= decay * peak) break;
    half *= 2.0;
  }
  return {center - half, center + half};
}

/// Adaptive quadrature over the whole real line with auto-extended window.
template <typename F>
inline QuadratureResult integrate_line(const F& f, double center, double scale,
                                       double rel_tol = 1e-10,
                                       double abs_tol = 1e-14) {
  const auto [lo, hi] = auto_window(f, center, scale);
  return integrate(f, lo, hi, rel_tol, abs_tol);
}

}  // namespace thorne
