#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace evosemi::detail {

enum class TailVerdict { Diverges, Converges, Inconclusive };

struct TailOptions {
  double stall_tol = 1e-12;      // two successive increments below this: converged
  double diverge_ratio = 0.9;    // increment ratios staying above: diverges
  double converge_ratio = 0.6;   // increment ratios staying below: converges
  std::size_t window = 6;        // number of trailing ratios inspected
};

struct TailAnalysis {
  TailVerdict verdict = TailVerdict::Inconclusive;
  double estimate = 0.0;        // limit estimate when converging
  double uncertainty = 0.0;     // geometric tail bound on the estimate
  double last_increment = 0.0;
  double last_ratio = 0.0;
};

/// Classifies the limit of a monotone sequence sampled at geometrically
/// growing arguments. Increments that fail to shrink (ratio ≳ 1, e.g. a
/// logarithm sampled at doubling arguments) are taken as divergence;
/// geometrically shrinking increments as convergence.
inline TailAnalysis analyze_tail(const std::vector<double>& v,
                                 const TailOptions& opt = {}) {
  TailAnalysis out;
  if (v.size() < 3) return out;
  std::vector<double> inc;
  inc.reserve(v.size() - 1);
  for (std::size_t i = 1; i < v.size(); ++i) inc.push_back(std::abs(v[i] - v[i - 1]));
  out.last_increment = inc.back();

  const std::size_t m = inc.size();
  if (inc[m - 1] <= opt.stall_tol && inc[m - 2] <= opt.stall_tol) {
    out.verdict = TailVerdict::Converges;
    out.estimate = v.back();
    out.uncertainty = inc[m - 1];
    return out;
  }
  if (m < opt.window + 1) return out;

  double min_r = 1e300, max_r = 0.0;
  for (std::size_t k = m - opt.window; k < m; ++k) {
    if (inc[k - 1] == 0.0) {
      // A zero increment followed by motion is not a monotone tail.
      if (inc[k] == 0.0) continue;
      return out;
    }
    const double r = inc[k] / inc[k - 1];
    min_r = std::min(min_r, r);
    max_r = std::max(max_r, r);
  }
  out.last_ratio = inc[m - 2] > 0 ? inc[m - 1] / inc[m - 2] : 0.0;
  if (min_r >= opt.diverge_ratio) {
    out.verdict = TailVerdict::Diverges;
    return out;
  }
  if (max_r <= opt.converge_ratio) {
    const double sign = v.back() >= v[v.size() - 2] ? 1.0 : -1.0;
    const double tail = inc.back() * max_r / (1.0 - max_r);
    out.verdict = TailVerdict::Converges;
    out.estimate = v.back() + sign * tail;
    out.uncertainty = tail;
  }
  return out;
}

}  // namespace evosemi::detail
