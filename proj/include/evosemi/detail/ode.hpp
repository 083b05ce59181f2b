#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "evosemi/error.hpp"
#include "evosemi/types.hpp"

namespace evosemi::detail {

struct IntegratorOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double initial_step = 1e-2;
  double min_step = 1e-14;
  long max_steps = 2'000'000;
};

/// Dormand–Prince 5(4) propagation of Y' = A(t) Y from (t0, y0) to t1 >= t0,
/// with a PI step-size controller.
inline Matrix propagate_dopri5(const std::function<Matrix(double)>& coeff,
                               double t0, double t1, Matrix y,
                               const IntegratorOptions& opt) {
  if (t1 == t0) return y;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double span = t1 - t0;
  double h = std::min(opt.initial_step, span);
  double t = t0;
  double err_prev = 1e-4;
  Matrix k1 = coeff(t) * y;
  for (long step = 0; step < opt.max_steps; ++step) {
    if (t >= t1) return y;
    const bool last = t + h >= t1 || (t1 - (t + h)) < 1e-12 * std::abs(span);
    if (last) h = t1 - t;

    const Matrix k2 = coeff(t + c2 * h) * (y + h * a21 * k1);
    const Matrix k3 = coeff(t + c3 * h) * (y + h * (a31 * k1 + a32 * k2));
    const Matrix k4 = coeff(t + c4 * h) * (y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Matrix k5 = coeff(t + c5 * h) *
                      (y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Matrix k6 = coeff(t + h) *
                      (y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Matrix y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double t_new = last ? t1 : t + h;
    const Matrix k7 = coeff(t_new) * y_new;
    const Matrix err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double sq = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
      const double r = err(i) / sc;
      sq += r * r;
    }
    const double err_norm = std::sqrt(sq / static_cast<double>(y.size()));
    if (!std::isfinite(err_norm)) {
      h *= 0.25;
    } else if (err_norm <= 1.0) {
      t = t_new;
      y = y_new;
      k1 = k7;
      const double fac = err_norm == 0.0
                             ? 5.0
                             : 0.9 * std::pow(err_norm, -0.7 / 5) * std::pow(err_prev, 0.4 / 5);
      h *= std::clamp(fac, 0.2, 5.0);
      err_prev = std::max(err_norm, 1e-4);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err_norm, -1.0 / 5));
    }
    if (h < opt.min_step && t < t1) {
      throw Error(ErrorKind::IntegratorFailure,
                  "step size collapsed near t = " + std::to_string(t));
    }
  }
  throw Error(ErrorKind::IntegratorFailure, "step budget exhausted");
}

}  // namespace evosemi::detail
