#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <type_traits>
#include <vector>

#include "evosemi/types.hpp"

namespace evosemi::detail {

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const Vector& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

template <typename V>
V zero_like(const V& proto) {
  if constexpr (std::is_same_v<V, double>) {
    return 0.0;
  } else {
    return V::Zero(proto.size());
  }
}

template <typename V>
struct Segment {
  double a, b;
  V value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

/// One G7/K15 panel on [a, b]: Kronrod value plus |K15 − G7| error.
template <typename V, typename F>
Segment<V> gk15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  V fc = f(c);
  V kron = fc * kWgk[7];
  V gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    V f1 = f(c - dx);
    V f2 = f(c + dx);
    V sum = f1 + f2;
    kron += sum * kWgk[j];
    if (j % 2 == 1) gauss += sum * kWg[j / 2];
  }
  kron *= h;
  gauss *= h;
  V diff = kron - gauss;
  return Segment<V>{a, b, kron, magnitude(diff)};
}

struct QuadratureOptions {
  double abs_tol = 1e-8;
  double rel_tol = 0.0;
  int max_segments = 20000;
};

template <typename V>
struct QuadratureResult {
  V value;
  double error = 0.0;
  int segments = 0;
  bool converged = false;
};

/// Globally adaptive G7/K15 over [a, b], pre-split at `breaks` (points
/// outside (a, b) are ignored). The worst segment is bisected until the
/// summed error estimate meets the tolerance.
template <typename V, typename F>
QuadratureResult<V> integrate_adaptive(const F& f, double a, double b,
                                       std::vector<double> breaks,
                                       const QuadratureOptions& opt = {}) {
  QuadratureResult<V> out;
  if (!(b > a)) {
    out.value = zero_like<V>(f(a));
    out.converged = true;
    return out;
  }
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> cuts;
  for (double x : breaks) {
    if (x < a || x > b) continue;
    if (!cuts.empty() && x - cuts.back() <= 1e-14 * std::max(1.0, std::abs(x))) continue;
    cuts.push_back(x);
  }
  if (cuts.back() < b) cuts.back() = b;

  std::priority_queue<Segment<V>> heap;
  double total_err = 0.0;
  V total;
  bool init = false;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto seg = gk15<V>(f, cuts[i], cuts[i + 1]);
    total_err += seg.error;
    if (!init) {
      total = seg.value;
      init = true;
    } else {
      total += seg.value;
    }
    heap.push(std::move(seg));
  }
  int count = static_cast<int>(heap.size());
  while (total_err > std::max(opt.abs_tol, opt.rel_tol * magnitude(total))) {
    if (count >= opt.max_segments) break;
    Segment<V> worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(std::move(worst));
      break;
    }
    auto left = gk15<V>(f, worst.a, mid);
    auto right = gk15<V>(f, mid, worst.b);
    total -= worst.value;
    total += left.value;
    total += right.value;
    total_err += left.error + right.error - worst.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
    ++count;
  }
  // Re-sum from the segments to shed accumulated update round-off.
  V sum = zero_like<V>(total);
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sum;
  out.error = err;
  out.segments = count;
  out.converged = err <= std::max(opt.abs_tol, opt.rel_tol * magnitude(sum));
  return out;
}

/// Cumulative integral of f over consecutive cells of `nodes`, one Simpson
/// panel (endpoints + midpoint) per cell. result[0] = 0.
template <typename F>
std::vector<double> cumulative_simpson(const F& f, const std::vector<double>& nodes) {
  std::vector<double> out(nodes.size(), 0.0);
  if (nodes.empty()) return out;
  double f_prev = f(nodes[0]);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double h = nodes[i] - nodes[i - 1];
    const double f_mid = f(nodes[i - 1] + 0.5 * h);
    const double f_next = f(nodes[i]);
    out[i] = out[i - 1] + h / 6.0 * (f_prev + 4.0 * f_mid + f_next);
    f_prev = f_next;
  }
  return out;
}

}  // namespace evosemi::detail
