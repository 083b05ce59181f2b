#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "evosemi/detail/interpolation.hpp"
#include "evosemi/detail/limits.hpp"
#include "evosemi/detail/quadrature.hpp"
#include "evosemi/detail/root_finding.hpp"
#include "evosemi/error.hpp"
#include "evosemi/types.hpp"

namespace evosemi {

using ScalarFn = std::function<double(double)>;

/// A continuous, strictly increasing μ: ℝ → (−∞, ℓ) with μ(−∞) = −∞.
///
/// Instances are immutable; copies share the underlying callables and any
/// tabulated data. `ell()` is empty until declared by the supplier or
/// established with classify_ell().
class GrowthRate {
 public:
  struct Spec {
    std::string name = "custom";
    ScalarFn eval;
    ScalarFn derivative;  // optional
    ScalarFn inverse;     // optional
    std::optional<ExtendedReal> ell;
    Interval validation_window{-10.0, 10.0};
    std::vector<double> kinks;
    std::vector<std::string> warnings;
    bool tabulated = false;
    double inversion_tol = 1e-10;
  };

  explicit GrowthRate(Spec spec) : spec_(std::make_shared<const Spec>(std::move(spec))) {
    if (!spec_->eval) throw std::invalid_argument("GrowthRate: eval is required");
  }

  double operator()(double s) const { return spec_->eval(s); }
  double eval(double s) const { return spec_->eval(s); }

  bool has_derivative() const { return static_cast<bool>(spec_->derivative); }
  bool has_closed_inverse() const { return static_cast<bool>(spec_->inverse); }

  /// μ′(s); central differences when no derivative was supplied.
  double derivative(double s) const {
    if (spec_->derivative) return spec_->derivative(s);
    const double h = 1e-6 * std::max(1.0, std::abs(s));
    return (spec_->eval(s + h) - spec_->eval(s - h)) / (2 * h);
  }

  /// μ⁻¹(r) for r < ℓ.
  double invert(double r) const {
    if (spec_->ell && spec_->ell->is_finite() && r >= spec_->ell->value()) {
      throw Error(ErrorKind::RangeExceeded,
                  "cannot invert " + name() + " at r = " + std::to_string(r) +
                      " >= ell = " + spec_->ell->str());
    }
    if (spec_->inverse) return spec_->inverse(r);

    auto g = [&](double s) { return spec_->eval(s) - r; };
    const Interval& w = spec_->validation_window;
    const double x0 = std::clamp(0.0, w.lo, w.hi);
    const double step = std::max(1.0, 0.125 * w.width());
    auto bracket = detail::expand_bracket_increasing(g, x0, step, 64);
    if (!bracket) {
      throw Error(ErrorKind::BracketFailure,
                  "no bracket for " + name() + "^{-1}(" + std::to_string(r) + ")");
    }
    detail::RootOptions opt;
    opt.x_tol = 0.0;
    opt.x_rtol = 2e-16;
    opt.max_iter = 300;
    return detail::solve_bracketed(g, *bracket, opt);
  }

  const std::optional<ExtendedReal>& ell() const { return spec_->ell; }
  bool ell_is_infinite() const { return spec_->ell && spec_->ell->is_plus_infinity(); }
  const Interval& validation_window() const { return spec_->validation_window; }
  const std::vector<double>& kinks() const { return spec_->kinks; }
  const std::vector<std::string>& warnings() const { return spec_->warnings; }
  const std::string& name() const { return spec_->name; }
  bool is_tabulated() const { return spec_->tabulated; }
  double inversion_tol() const { return spec_->inversion_tol; }

  GrowthRate with_ell(ExtendedReal ell) const {
    Spec s = *spec_;
    s.ell = ell;
    return GrowthRate(std::move(s));
  }

  GrowthRate with_window(Interval w) const {
    Spec s = *spec_;
    s.validation_window = w;
    return GrowthRate(std::move(s));
  }

  const Spec& spec() const { return *spec_; }

 private:
  std::shared_ptr<const Spec> spec_;
};

inline double invert(const GrowthRate& mu, double r) { return mu.invert(r); }

// ---------------------------------------------------------------------------
// Catalog

namespace growth {

inline GrowthRate identity() {
  GrowthRate::Spec s;
  s.name = "identity";
  s.eval = [](double x) { return x; };
  s.derivative = [](double) { return 1.0; };
  s.inverse = [](double r) { return r; };
  s.ell = ExtendedReal::plus_infinity();
  return GrowthRate(std::move(s));
}

/// sign(s)·ln(1+|s|): polynomial behaviour on the line.
inline GrowthRate polynomial_log() {
  GrowthRate::Spec s;
  s.name = "polynomial_log";
  s.eval = [](double x) { return std::copysign(std::log1p(std::abs(x)), x); };
  s.derivative = [](double x) { return 1.0 / (1.0 + std::abs(x)); };
  s.inverse = [](double r) { return std::copysign(std::expm1(std::abs(r)), r); };
  s.ell = ExtendedReal::plus_infinity();
  s.kinks = {0.0};
  return GrowthRate(std::move(s));
}

/// −e^{−s}, bounded above by ℓ = 0.
inline GrowthRate neg_exp() {
  GrowthRate::Spec s;
  s.name = "neg_exp";
  s.eval = [](double x) { return -std::exp(-x); };
  s.derivative = [](double x) { return std::exp(-x); };
  s.inverse = [](double r) { return -std::log(-r); };
  s.ell = ExtendedReal::finite(0.0);
  return GrowthRate(std::move(s));
}

/// s^{2n+1}.
inline GrowthRate odd_power(int n) {
  if (n < 0) throw std::invalid_argument("odd_power: n must be >= 0");
  if (n == 0) return identity();
  const int p = 2 * n + 1;
  GrowthRate::Spec s;
  s.name = "odd_power(" + std::to_string(n) + ")";
  s.eval = [p](double x) { return std::pow(x, p); };
  s.derivative = [p](double x) { return p * std::pow(x, p - 1); };
  if (p == 3) {
    s.inverse = [](double r) { return std::cbrt(r); };
  } else {
    s.inverse = [p](double r) { return std::copysign(std::pow(std::abs(r), 1.0 / p), r); };
  }
  s.ell = ExtendedReal::plus_infinity();
  return GrowthRate(std::move(s));
}

/// Tabulated μ through strictly increasing (s, μ(s)) pairs, monotone cubic
/// inside the table and linear (end-secant) outside it.
inline GrowthRate tabulated(std::vector<double> s_nodes, std::vector<double> mu_values,
                            std::string name = "tabulated",
                            ScalarFn derivative = {}) {
  if (s_nodes.size() < 2 || s_nodes.size() != mu_values.size()) {
    throw std::invalid_argument("tabulated growth rate needs >= 2 matching nodes");
  }
  for (std::size_t i = 1; i < s_nodes.size(); ++i) {
    if (!(s_nodes[i] > s_nodes[i - 1]) || !(mu_values[i] > mu_values[i - 1])) {
      throw std::invalid_argument(
          "tabulated growth rate must be strictly increasing in both columns");
    }
  }
  auto table = std::make_shared<const detail::MonotoneCubic>(s_nodes, mu_values);
  const std::size_t n = s_nodes.size();
  const double lo_slope = (mu_values[1] - mu_values[0]) / (s_nodes[1] - s_nodes[0]);
  const double hi_slope =
      (mu_values[n - 1] - mu_values[n - 2]) / (s_nodes[n - 1] - s_nodes[n - 2]);

  GrowthRate::Spec s;
  s.name = std::move(name);
  s.eval = [table, lo_slope, hi_slope](double x) {
    if (x < table->front()) return table->values().front() + lo_slope * (x - table->front());
    if (x > table->back()) return table->values().back() + hi_slope * (x - table->back());
    return (*table)(x);
  };
  if (derivative) {
    s.derivative = std::move(derivative);
  } else {
    s.derivative = [table, lo_slope, hi_slope](double x) {
      if (x < table->front()) return lo_slope;
      if (x > table->back()) return hi_slope;
      return table->derivative(x);
    };
  }
  s.validation_window = {s_nodes.front(), s_nodes.back()};
  s.tabulated = true;
  return GrowthRate(std::move(s));
}

}  // namespace growth

// ---------------------------------------------------------------------------
// ℓ classification

struct EllProbeOptions {
  double start = 1.0;
  double horizon = 1e6;
  detail::TailOptions tail{};
};

struct EllReport {
  ExtendedReal ell = ExtendedReal::plus_infinity();
  double uncertainty = 0.0;
  std::vector<double> probe_points;
  std::vector<double> probe_values;
};

/// Probes μ at geometrically growing s up to the horizon and decides whether
/// μ is unbounded (ℓ = +∞) or plateaus at a finite ℓ.
inline EllReport classify_ell(const GrowthRate& mu, const EllProbeOptions& opt = {}) {
  EllReport rep;
  for (double s = opt.start; s <= opt.horizon * (1 + 1e-12); s *= 2.0) {
    const double v = mu(s);
    rep.probe_points.push_back(s);
    rep.probe_values.push_back(v);
    if (!std::isfinite(v) || v > 1e300) {
      rep.ell = ExtendedReal::plus_infinity();
      return rep;
    }
  }
  const auto tail = detail::analyze_tail(rep.probe_values, opt.tail);
  switch (tail.verdict) {
    case detail::TailVerdict::Diverges:
      rep.ell = ExtendedReal::plus_infinity();
      return rep;
    case detail::TailVerdict::Converges:
      rep.ell = ExtendedReal::finite(tail.estimate);
      rep.uncertainty = tail.uncertainty;
      return rep;
    case detail::TailVerdict::Inconclusive:
      break;
  }
  throw Error(ErrorKind::Inconclusive,
              "probe up to s = " + std::to_string(opt.horizon) +
                  " cannot separate bounded from unbounded growth of " + mu.name());
}

/// Same probe towards −∞; true when μ(s) → −∞ is supported by the samples.
inline bool probe_lower_divergence(const GrowthRate& mu, const EllProbeOptions& opt = {}) {
  std::vector<double> vals;
  for (double s = opt.start; s <= opt.horizon * (1 + 1e-12); s *= 2.0) {
    const double v = mu(-s);
    if (!std::isfinite(v) || v < -1e300) return true;
    vals.push_back(v);
  }
  return detail::analyze_tail(vals, opt.tail).verdict == detail::TailVerdict::Diverges;
}

// ---------------------------------------------------------------------------
// Construction from a rate density ρ: μ(t) = ∫₀ᵗ ρ.

struct RateDensityOptions {
  Interval window{-50.0, 50.0};  // tabulation window, must contain 0
  int cells_per_side = 4000;
  detail::QuadratureOptions tail_quadrature{1e-11, 1e-13, 20000};
  EllProbeOptions probe{};
  std::string name = "from_density";
};

inline GrowthRate from_rate_density(ScalarFn rho, const RateDensityOptions& opt = {}) {
  if (!(opt.window.lo < 0.0 && opt.window.hi > 0.0)) {
    throw std::invalid_argument("from_rate_density: window must contain 0 in its interior");
  }
  const int m = std::max(2, opt.cells_per_side);
  std::vector<double> left(m + 1), right(m + 1);
  for (int i = 0; i <= m; ++i) {
    left[i] = opt.window.lo * (static_cast<double>(i) / m);   // 0 → lo
    right[i] = opt.window.hi * (static_cast<double>(i) / m);  // 0 → hi
  }
  left.back() = opt.window.lo;
  right.back() = opt.window.hi;

  std::vector<std::string> warnings;
  bool zero_run_reported = false;
  auto checked_rho = [&](double x) {
    const double v = rho(x);
    if (v < 0.0 || std::isnan(v)) {
      throw Error(ErrorKind::NegativeDensity,
                  "rate density is negative at " + std::to_string(x));
    }
    return v;
  };

  // Integrate outward from 0 on each side.
  std::vector<double> left_rev(left.begin(), left.end());
  std::reverse(left_rev.begin(), left_rev.end());  // lo → 0
  std::vector<double> cum_left = detail::cumulative_simpson(checked_rho, left_rev);
  std::vector<double> cum_right = detail::cumulative_simpson(checked_rho, right);

  // Density-of-support check on the grid: a full cell (ends + midpoint) with
  // ρ = 0 suggests {ρ > 0} is not dense.
  auto scan_zero_cells = [&](const std::vector<double>& nodes) {
    for (std::size_t i = 1; i < nodes.size() && !zero_run_reported; ++i) {
      const double a = nodes[i - 1], b = nodes[i];
      if (rho(a) == 0.0 && rho(0.5 * (a + b)) == 0.0 && rho(b) == 0.0) {
        warnings.push_back("DegenerateDensity: rho vanishes on [" + std::to_string(std::min(a, b)) +
                           ", " + std::to_string(std::max(a, b)) + "]");
        zero_run_reported = true;
      }
    }
  };
  scan_zero_cells(left_rev);
  scan_zero_cells(right);

  std::vector<double> xs, ys;
  xs.reserve(2 * m + 1);
  ys.reserve(2 * m + 1);
  const double total_left = cum_left.back();
  for (std::size_t i = 0; i < left_rev.size(); ++i) {
    xs.push_back(left_rev[i]);
    ys.push_back(cum_left[i] - total_left);  // −∫_x^0 ρ
  }
  for (std::size_t i = 1; i < right.size(); ++i) {
    xs.push_back(right[i]);
    ys.push_back(cum_right[i]);
  }
  auto table = std::make_shared<const detail::MonotoneCubic>(xs, ys);
  const double lo = opt.window.lo, hi = opt.window.hi;
  const double mu_lo = ys.front(), mu_hi = ys.back();
  auto tail_q = opt.tail_quadrature;

  GrowthRate::Spec s;
  s.name = opt.name;
  s.eval = [table, rho, lo, hi, mu_lo, mu_hi, tail_q](double x) {
    if (x > hi) {
      auto r = detail::integrate_adaptive<double>(rho, hi, x, {}, tail_q);
      return mu_hi + r.value;
    }
    if (x < lo) {
      auto r = detail::integrate_adaptive<double>(rho, x, lo, {}, tail_q);
      return mu_lo - r.value;
    }
    return (*table)(x);
  };
  s.derivative = rho;
  s.validation_window = opt.window;
  s.tabulated = true;
  s.inversion_tol = 1e-8;
  GrowthRate provisional(s);

  bool upper_diverges = false;
  try {
    upper_diverges = classify_ell(provisional, opt.probe).ell.is_plus_infinity();
  } catch (const Error&) {
    warnings.push_back("divergence of the integral towards +inf is inconclusive");
  }
  if (upper_diverges) {
    s.ell = ExtendedReal::plus_infinity();
  }
  if (!probe_lower_divergence(provisional, opt.probe)) {
    warnings.push_back("divergence of the integral towards -inf is inconclusive");
  }
  s.warnings = std::move(warnings);
  return GrowthRate(std::move(s));
}

// ---------------------------------------------------------------------------
// Sampled invariant checks

struct GrowthRateCheck {
  std::size_t monotonicity_violations = 0;
  double max_roundtrip_error = 0.0;
  double max_derivative_rel_error = 0.0;
  bool lower_limit_probe = false;
};

/// Randomized check of monotonicity, inversion round-trip and (when a
/// derivative is supplied) finite-difference consistency on the window.
inline GrowthRateCheck check_growth_rate(const GrowthRate& mu, std::size_t samples,
                                         unsigned seed = 1) {
  GrowthRateCheck out;
  std::mt19937_64 rng(seed);
  const Interval w = mu.validation_window();
  std::uniform_real_distribution<double> us(w.lo, w.hi);
  for (std::size_t i = 0; i < samples; ++i) {
    double a = us(rng), b = us(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!(mu(a) < mu(b))) ++out.monotonicity_violations;
  }
  double r_lo = mu(w.lo), r_hi = mu(w.hi);
  if (mu.ell() && mu.ell()->is_finite()) r_hi = std::min(r_hi, mu.ell()->value());
  std::uniform_real_distribution<double> ur(r_lo, r_hi);
  const std::size_t n_inv = std::max<std::size_t>(1, samples / 10);
  for (std::size_t i = 0; i < n_inv; ++i) {
    const double r = ur(rng);
    if (mu.ell() && mu.ell()->is_finite() && r >= mu.ell()->value()) continue;
    out.max_roundtrip_error = std::max(out.max_roundtrip_error, std::abs(mu(mu.invert(r)) - r));
  }
  if (mu.has_derivative()) {
    const double h = 1e-5;
    for (std::size_t i = 0; i < n_inv; ++i) {
      const double s = us(rng);
      bool near_kink = false;
      for (double k : mu.kinks()) near_kink |= std::abs(s - k) < 10 * h;
      if (near_kink) continue;
      const double fd = (mu(s + h) - mu(s - h)) / (2 * h);
      const double d = mu.derivative(s);
      const double denom = std::max(std::abs(d), 1.0);
      out.max_derivative_rel_error = std::max(out.max_derivative_rel_error, std::abs(fd - d) / denom);
    }
  }
  out.lower_limit_probe = probe_lower_divergence(mu);
  return out;
}

}  // namespace evosemi
