// The linear weight-width relationship across components: w = a*sigma + b,
// with consecutive (sigma, w) segment lengths in a fixed ratio rho.
// Generation walks outward from a base width; analysis recovers the line and
// the ratios from an observed component set.
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "thorne/common.hpp"
#include "thorne/model.hpp"

namespace thorne {

/// (width, weight) point in the component plane.
using WidthWeightPoint = std::pair<double, double>;

struct ComponentGeometry {
  double slope = 0.0;          ///< a
  double intercept = 0.0;      ///< b
  double base_width = 1.0;     ///< sigma_1 > 0
  double segment_ratio = 1.0;  ///< rho > 0, ratio of consecutive segment lengths
  /// sigma-extent of the first segment (sigma_2 - sigma_1).  The ratio rule
  /// only pins segments relative to one another; this anchors the scale.
  /// Defaults to base_width when not supplied.
  double first_step = 0.0;

  double step() const { return first_step > 0.0 ? first_step : base_width; }
};

/// Geometry through two observed (width, weight) points with a given ratio.
inline ComponentGeometry geometry_from_points(const WidthWeightPoint& p1,
                                              const WidthWeightPoint& p2,
                                              double segment_ratio) {
  if (!(p2.first != p1.first))
    throw data_error("geometry_from_points: identical widths");
  ComponentGeometry g;
  g.slope = (p2.second - p1.second) / (p2.first - p1.first);
  g.intercept = p1.second - g.slope * p1.first;
  g.base_width = p1.first;
  g.first_step = p2.first - p1.first;
  g.segment_ratio = segment_ratio;
  return g;
}

/// Generate n components on the geometry's line.  All means are zero unless
/// per-component means are supplied.
inline std::vector<ComponentGaussian> generate_components(
    const ComponentGeometry& geom, std::size_t n,
    const std::vector<double>& means = {}) {
  if (n < 2) throw config_error("generate_components: need n >= 2");
  if (!(geom.base_width > 0.0))
    throw config_error("generate_components: base_width must be > 0");
  if (!(geom.segment_ratio > 0.0))
    throw config_error("generate_components: segment_ratio must be > 0");
  if (!means.empty() && means.size() != n)
    throw config_error("generate_components: means list must have length n");
  std::vector<ComponentGaussian> out;
  out.reserve(n);
  double sigma = geom.base_width;
  double step = geom.step();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = geom.slope * sigma + geom.intercept;
    if (!(sigma > 0.0))
      throw config_error("generate_components: nonpositive width at index " +
                         std::to_string(i));
    if (!(w > 0.0))
      throw config_error("generate_components: nonpositive weight at index " +
                         std::to_string(i));
    out.push_back({w, means.empty() ? 0.0 : means[i], sigma});
    sigma += step;
    step *= geom.segment_ratio;
  }
  return out;
}

struct GeometryAnalysis {
  ComponentGeometry geometry;
  double r_squared = 0.0;
  std::vector<double> segment_ratios;  ///< one per adjacent segment pair
};

/// Least-squares line through (width, weight) points plus the Euclidean
/// segment-length ratio for each adjacent pair of segments.
inline GeometryAnalysis analyze_component_geometry(
    const std::vector<WidthWeightPoint>& points) {
  if (points.size() < 3)
    throw data_error("analyze_component_geometry: need at least 3 points");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i] == points[i - 1])
      throw data_error("analyze_component_geometry: duplicate point at index " +
                       std::to_string(i));
  const auto n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double vxx = sxx - sx * sx / n;
  const double vxy = sxy - sx * sy / n;
  const double vyy = syy - sy * sy / n;
  if (!(vxx > 0.0))
    throw data_error("analyze_component_geometry: widths are degenerate");
  GeometryAnalysis out;
  out.geometry.slope = vxy / vxx;
  out.geometry.intercept = (sy - out.geometry.slope * sx) / n;
  out.geometry.base_width = points.front().first;
  out.geometry.first_step = points[1].first - points[0].first;
  out.r_squared = (vyy > 0.0) ? (vxy * vxy) / (vxx * vyy) : 1.0;
  std::vector<double> lengths;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dx = points[i].first - points[i - 1].first;
    const double dy = points[i].second - points[i - 1].second;
    lengths.push_back(std::hypot(dx, dy));
  }
  for (std::size_t i = 1; i < lengths.size(); ++i)
    out.segment_ratios.push_back(lengths[i] / lengths[i - 1]);
  double prod = 1.0;
  for (double r : out.segment_ratios) prod *= r;
  out.geometry.segment_ratio =
      out.segment_ratios.empty()
          ? 1.0
          : std::pow(prod, 1.0 / static_cast<double>(out.segment_ratios.size()));
  return out;
}

/// Convenience overload for component lists.
inline GeometryAnalysis analyze_component_geometry(
    const std::vector<ComponentGaussian>& comps) {
  std::vector<WidthWeightPoint> pts;
  pts.reserve(comps.size());
  for (const auto& c : comps) pts.emplace_back(c.width, c.weight);
  return analyze_component_geometry(pts);
}

}  // namespace thorne
