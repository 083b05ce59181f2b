#pragma once

#include <cmath>
#include <optional>
#include <utility>

namespace evosemi::detail {

struct RootOptions {
  double x_tol = 1e-12;   // absolute bracket width
  double x_rtol = 4e-16;  // relative bracket width
  double f_tol = 0.0;     // |f| at or below this stops early
  int max_iter = 400;
};

struct Bracket {
  double lo, hi;
  double f_lo, f_hi;
};

/// Grows [x0, x0 + step·2^k] (or leftwards) until the increasing function f
/// changes sign. Returns nothing when `max_expansions` doublings do not
/// suffice.
template <typename F>
std::optional<Bracket> expand_bracket_increasing(const F& f, double x0,
                                                 double step,
                                                 int max_expansions) {
  double f0 = f(x0);
  if (f0 == 0.0) return Bracket{x0, x0, f0, f0};
  if (std::isnan(f0)) return std::nullopt;
  const double dir = f0 < 0.0 ? 1.0 : -1.0;
  double prev = x0, f_prev = f0;
  for (int k = 0; k <= max_expansions; ++k) {
    const double x = x0 + dir * step * std::ldexp(1.0, k);
    const double fx = f(x);
    if (std::isnan(fx)) return std::nullopt;
    if ((fx >= 0.0) != (f_prev >= 0.0) || fx == 0.0) {
      if (dir > 0) return Bracket{prev, x, f_prev, fx};
      return Bracket{x, prev, fx, f_prev};
    }
    prev = x;
    f_prev = fx;
  }
  return std::nullopt;
}

/// Bracketed root of f on [b.lo, b.hi] (sign change required). Illinois
/// false-position steps, falling back to bisection whenever a step fails to
/// halve the bracket.
template <typename F>
double solve_bracketed(const F& f, Bracket b, const RootOptions& opt = {}) {
  double a = b.lo, c = b.hi, fa = b.f_lo, fc = b.f_hi;
  if (fa == 0.0) return a;
  if (fc == 0.0) return c;
  // ga/gc are the Illinois-weighted copies used for interpolation only.
  double ga = fa, gc = fc;
  int side = 0;
  double width_before = c - a;
  for (int it = 0; it < opt.max_iter; ++it) {
    const double width = c - a;
    const double scale = std::max(std::abs(a), std::abs(c));
    if (width <= opt.x_tol + opt.x_rtol * scale) break;

    double x;
    const bool bisect = (it % 3 == 2) && (width > 0.5 * width_before);
    if (bisect || !std::isfinite(ga) || !std::isfinite(gc)) {
      x = 0.5 * (a + c);
    } else {
      x = (a * gc - c * ga) / (gc - ga);
      if (!(x > a && x < c)) x = 0.5 * (a + c);
    }
    if (it % 3 == 2) width_before = width;

    const double fx = f(x);
    if (fx == 0.0 || std::abs(fx) <= opt.f_tol) return x;
    if ((fx > 0.0) == (fc > 0.0)) {
      c = x;
      fc = gc = fx;
      if (side == -1) ga *= 0.5;
      side = -1;
    } else {
      a = x;
      fa = ga = fx;
      if (side == 1) gc *= 0.5;
      side = 1;
    }
  }
  return std::abs(fa) <= std::abs(fc) ? a : c;
}

}  // namespace evosemi::detail
