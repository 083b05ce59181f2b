#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace evosemi::detail {

/// Shape-preserving piecewise-cubic Hermite interpolant (Fritsch–Carlson
/// slopes, the same construction as PCHIP). Strictly monotone data yields a
/// strictly monotone interpolant.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;

  MonotoneCubic(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size() || x_.size() < 2) {
      throw std::invalid_argument("MonotoneCubic: need >= 2 matching nodes");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
      if (!(x_[i] > x_[i - 1])) {
        throw std::invalid_argument("MonotoneCubic: nodes must increase");
      }
    }
    compute_slopes();
  }

  double operator()(double x) const {
    const std::size_t i = cell(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
  }

  double derivative(double x) const {
    const std::size_t i = cell(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double dh00 = (6 * t2 - 6 * t) / h;
    const double dh10 = 3 * t2 - 4 * t + 1;
    const double dh01 = (-6 * t2 + 6 * t) / h;
    const double dh11 = 3 * t2 - 2 * t;
    return dh00 * y_[i] + dh10 * d_[i] + dh01 * y_[i + 1] + dh11 * d_[i + 1];
  }

  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& values() const { return y_; }
  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

 private:
  std::size_t cell(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(i, x_.size() - 2);
  }

  void compute_slopes() {
    const std::size_t n = x_.size();
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        d_[i] = 0.0;
      } else {
        const double w1 = 2 * h[i] + h[i - 1];
        const double w2 = h[i] + 2 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  static double end_slope(double h0, double h1, double m0, double m1) {
    double d = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if (d * m0 <= 0.0) return 0.0;
    if (m0 * m1 <= 0.0 && std::abs(d) > std::abs(3 * m0)) return 3 * m0;
    return d;
  }

  std::vector<double> x_, y_, d_;
};

}  // namespace evosemi::detail
