// Density histograms: the shared histogram value type, the classical
// equal-width baseline, and text export.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "thorne/common.hpp"

namespace thorne {

struct DensityHistogram {
  std::vector<double> edges;            ///< strictly increasing bin boundaries
  std::vector<double> densities;        ///< probability per unit variate
  std::vector<double> counts;           ///< raw counts per bin
  std::vector<double> representatives;  ///< per-bin abscissa (observation
                                        ///< centroid; midpoint when empty)
  std::size_t sample_count = 0;
  bool normalized = false;

  std::size_t bin_count() const { return densities.size(); }
  double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
  double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
  std::vector<double> widths() const {
    std::vector<double> w(bin_count());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = width(i);
    return w;
  }
  std::vector<double> centers() const {
    std::vector<double> c(bin_count());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = center(i);
    return c;
  }
  double total_probability() const {
    double p = 0.0;
    for (std::size_t i = 0; i < bin_count(); ++i) p += densities[i] * width(i);
    return p;
  }
  /// Piecewise-constant density lookup (0 outside the covered range).
  double density_at(double x) const {
    if (x < edges.front() || x > edges.back()) return 0.0;
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    std::size_t k = (it == edges.begin())
                        ? 0
                        : static_cast<std::size_t>(it - edges.begin()) - 1;
    k = std::min(k, bin_count() - 1);
    return densities[k];
  }
};

/// Conventional default bin count for n observations (log2 rule).
inline std::size_t standard_bin_count(std::size_t n) {
  if (n < 1) throw data_error("standard_bin_count: empty sample");
  return static_cast<std::size_t>(
      std::ceil(std::log2(static_cast<double>(n)))) + 1;
}

/// Equal-width density histogram spanning [min, max]; densities count/(N*w).
inline DensityHistogram plain_histogram(const std::vector<double>& data,
                                        std::size_t bin_count) {
  if (data.empty()) throw data_error("plain_histogram: empty data");
  if (bin_count < 1) throw config_error("plain_histogram: bin_count must be >= 1");
  const auto [mn_it, mx_it] = std::minmax_element(data.begin(), data.end());
  const double lo = *mn_it, hi = *mx_it;
  if (!(hi > lo))
    throw data_error("plain_histogram: degenerate data (all values equal)");
  DensityHistogram h;
  h.sample_count = data.size();
  h.edges.resize(bin_count + 1);
  for (std::size_t i = 0; i <= bin_count; ++i)
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bin_count);
  h.counts.assign(bin_count, 0.0);
  std::vector<double> sums(bin_count, 0.0);
  const double inv_w = static_cast<double>(bin_count) / (hi - lo);
  for (double x : data) {
    auto k = static_cast<std::size_t>(
        std::clamp((x - lo) * inv_w, 0.0, static_cast<double>(bin_count) - 1.0));
    // half-open bins with the last bin closed at hi
    if (x >= h.edges[k + 1] && k + 1 < bin_count) ++k;
    h.counts[k] += 1.0;
    sums[k] += x;
  }
  h.densities.resize(bin_count);
  h.representatives.resize(bin_count);
  const double n = static_cast<double>(data.size());
  for (std::size_t i = 0; i < bin_count; ++i) {
    h.densities[i] = h.counts[i] / (n * h.width(i));
    h.representatives[i] =
        h.counts[i] > 0.0 ? sums[i] / h.counts[i] : h.center(i);
  }
  h.normalized = true;
  return h;
}

/// Delimiter-separated export: edge_low, edge_high, density (15 sig digits).
inline std::string export_histogram(const DensityHistogram& h,
                                    char delimiter = '\t') {
  std::ostringstream os;
  os << std::setprecision(15);
  for (std::size_t i = 0; i < h.bin_count(); ++i)
    os << h.edges[i] << delimiter << h.edges[i + 1] << delimiter
       << h.densities[i] << '\n';
  return os.str();
}

/// Roughness: integrated squared second derivative of the piecewise-constant
/// density, realized on bin centers via divided differences.
inline double histogram_roughness(const DensityHistogram& h) {
  const auto c = h.centers();
  double r = 0.0;
  for (std::size_t k = 1; k + 1 < h.bin_count(); ++k) {
    const double h0 = c[k] - c[k - 1], h1 = c[k + 1] - c[k];
    const double d2 = 2.0 * (h.densities[k - 1] / (h0 * (h0 + h1)) -
                             h.densities[k] / (h0 * h1) +
                             h.densities[k + 1] / (h1 * (h0 + h1)));
    r += d2 * d2 * 0.5 * (h0 + h1);
  }
  return r;
}

}  // namespace thorne
