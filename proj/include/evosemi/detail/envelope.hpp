#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace evosemi::detail {

struct CloudPoint {
  double d;  // rate-time separation μ(t) − μ(s) >= 0
  double L;  // log of an operator norm
};

/// Upper concave envelope (Andrew's monotone chain) of a point cloud,
/// vertices ordered by increasing d.
inline std::vector<CloudPoint> upper_envelope(std::vector<CloudPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const CloudPoint& a, const CloudPoint& b) {
    return a.d < b.d || (a.d == b.d && a.L > b.L);
  });
  std::vector<CloudPoint> hull;
  for (const auto& p : pts) {
    if (!hull.empty() && hull.back().d == p.d) continue;  // keep max L per d
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.d - a.d) * (p.L - a.L) - (b.L - a.L) * (p.d - a.d);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }
  return hull;
}

struct LineFit {
  double intercept = 0.0;  // ln K (or ln N)
  double slope = 0.0;      // α (or −ν)
  std::vector<CloudPoint> envelope;
  double max_excess = 0.0;  // max over the cloud of L − (intercept + slope·d)
};

/// Fits L <= intercept + slope·d over the cloud. The intercept is pinned by
/// the d = 0 column (and is never below 0, i.e. K >= 1); the slope is the
/// tangent from (0, intercept) to the upper envelope, the smallest slope
/// compatible with that intercept.
inline LineFit fit_envelope_line(const std::vector<CloudPoint>& cloud, double d_eps = 0.0) {
  LineFit fit;
  double intercept = 0.0;
  for (const auto& p : cloud) {
    if (p.d <= d_eps) intercept = std::max(intercept, p.L);
  }
  std::vector<CloudPoint> pts;
  pts.reserve(cloud.size() + 1);
  pts.push_back({0.0, intercept});
  for (const auto& p : cloud) {
    if (p.d > d_eps) pts.push_back(p);
  }
  fit.envelope = upper_envelope(pts);
  fit.intercept = intercept;
  fit.slope = -INFINITY;
  if (fit.envelope.size() >= 2) {
    const auto& a = fit.envelope[0];
    const auto& b = fit.envelope[1];
    fit.slope = (b.L - a.L) / (b.d - a.d);
  }
  for (const auto& p : cloud) {
    const double slope = std::isfinite(fit.slope) ? fit.slope : 0.0;
    fit.max_excess = std::max(fit.max_excess, p.L - (fit.intercept + slope * p.d));
  }
  return fit;
}

}  // namespace evosemi::detail
