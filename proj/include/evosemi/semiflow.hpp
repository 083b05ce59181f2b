#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "evosemi/detail/limits.hpp"
#include "evosemi/detail/root_finding.hpp"
#include "evosemi/error.hpp"
#include "evosemi/growth_rate.hpp"
#include "evosemi/types.hpp"

namespace evosemi {

using SemiflowFn = std::function<double(double t, double s)>;

/// A real semiflow φ: ℝ₊ × ℝ → ℝ, either generated by a growth rate
/// (φ_t(s) = μ⁻¹(μ(s) − t)) or given in closed form.
class RealSemiflow {
 public:
  struct Generated {
    GrowthRate mu;
  };
  struct ClosedForm {
    SemiflowFn map;
    std::string name;
  };

  static RealSemiflow generated(GrowthRate mu) {
    return RealSemiflow(Generated{std::move(mu)}, {-kInf, kInf});
  }

  static RealSemiflow closed_form(SemiflowFn map, std::string name = "closed_form",
                                  Interval domain_window = {-kInf, kInf}) {
    return RealSemiflow(ClosedForm{std::move(map), std::move(name)}, domain_window);
  }

  /// The right translation φ_t(s) = s − t.
  static RealSemiflow translation() { return generated(growth::identity()); }

  bool is_generated() const { return std::holds_alternative<Generated>(kind_); }
  const GrowthRate* growth_rate() const {
    if (auto* g = std::get_if<Generated>(&kind_)) return &g->mu;
    return nullptr;
  }
  const Interval& domain_window() const { return window_; }
  double domain_margin() const { return margin_; }

  RealSemiflow with_domain(Interval w, double margin = 0.0) const {
    RealSemiflow out = *this;
    out.window_ = w;
    out.margin_ = margin;
    return out;
  }

  std::string name() const {
    if (auto* g = std::get_if<Generated>(&kind_)) return "generated(" + g->mu.name() + ")";
    return std::get<ClosedForm>(kind_).name;
  }

  /// φ_t(s).
  double operator()(double t, double s) const {
    if (!(t >= 0.0)) {
      throw Error(ErrorKind::Undefined, "semiflow time must be >= 0, got " + std::to_string(t));
    }
    if (s < window_.lo - margin_ || s > window_.hi + margin_) {
      throw Error(ErrorKind::DomainExceeded,
                  "s = " + std::to_string(s) + " outside the trusted window of " + name());
    }
    if (t == 0.0) return s;
    if (auto* g = std::get_if<Generated>(&kind_)) {
      return g->mu.invert(g->mu(s) - t);
    }
    return std::get<ClosedForm>(kind_).map(t, s);
  }

  double apply(double t, double s) const { return (*this)(t, s); }

 private:
  RealSemiflow(std::variant<Generated, ClosedForm> kind, Interval window)
      : kind_(std::move(kind)), window_(window) {}

  std::variant<Generated, ClosedForm> kind_;
  Interval window_;
  double margin_ = 0.0;
};

inline double apply(const RealSemiflow& phi, double t, double s) { return phi(t, s); }

// ---------------------------------------------------------------------------
// ω-limits

struct OmegaOptions {
  double floor = -1e6;  // below this the orbit is declared to reach −∞
  double t_start = 1.0;
  detail::TailOptions tail{};
};

struct OmegaReport {
  double s = 0.0;
  ExtendedReal value = ExtendedReal::minus_infinity();
  double horizon_used = 0.0;
  double last_increment = 0.0;
  std::vector<double> times;
  std::vector<double> values;
};

/// ω(s) = lim_{t→∞} φ_t(s), probed along t = t_start·2^k up to the horizon.
inline OmegaReport omega(const RealSemiflow& phi, double s, double horizon, double tol,
                         const OmegaOptions& opt = {}) {
  if (!(horizon > 0.0)) throw std::invalid_argument("omega: horizon must be positive");
  OmegaReport rep;
  rep.s = s;
  double prev = s;
  for (double t = opt.t_start; t <= horizon * (1 + 1e-12); t *= 2.0) {
    const double v = phi(t, s);
    rep.times.push_back(t);
    rep.values.push_back(v);
    rep.horizon_used = t;
    rep.last_increment = std::abs(v - prev);
    if (!(v >= opt.floor)) {  // also catches NaN/−inf from overflowing inverses
      rep.value = ExtendedReal::minus_infinity();
      return rep;
    }
    const std::size_t n = rep.values.size();
    if (n >= 2 && rep.last_increment < tol &&
        std::abs(rep.values[n - 2] - (n >= 3 ? rep.values[n - 3] : s)) < tol) {
      rep.value = ExtendedReal::finite(v);
      return rep;
    }
    prev = v;
  }
  std::vector<double> seq;
  seq.reserve(rep.values.size() + 1);
  seq.push_back(s);
  seq.insert(seq.end(), rep.values.begin(), rep.values.end());
  auto tail_opt = opt.tail;
  tail_opt.stall_tol = tol;
  const auto tail = detail::analyze_tail(seq, tail_opt);
  if (tail.verdict == detail::TailVerdict::Diverges) {
    rep.value = ExtendedReal::minus_infinity();
    return rep;
  }
  if (tail.verdict == detail::TailVerdict::Converges) {
    rep.value = ExtendedReal::finite(tail.estimate);
    return rep;
  }
  throw Error(ErrorKind::Inconclusive,
              "omega(" + std::to_string(s) + ") neither stabilizes nor diverges by t = " +
                  std::to_string(rep.horizon_used));
}

/// Probes lim_{s→+∞} ω(s) along s = s_start·2^k; +∞ when the sampled ω
/// values are finite and unbounded.
inline ExtendedReal omega_upper_limit(const RealSemiflow& phi, double s_start, double s_max,
                                      double horizon, double tol,
                                      const OmegaOptions& opt = {}) {
  std::vector<double> vals;
  for (double s = s_start; s <= s_max * (1 + 1e-12); s *= 2.0) {
    const auto rep = omega(phi, s, horizon, tol, opt);
    if (!rep.value.is_finite()) return ExtendedReal::minus_infinity();
    vals.push_back(rep.value.value());
  }
  auto tail_opt = opt.tail;
  tail_opt.stall_tol = tol;
  const auto tail = detail::analyze_tail(vals, tail_opt);
  if (tail.verdict == detail::TailVerdict::Diverges) return ExtendedReal::plus_infinity();
  if (tail.verdict == detail::TailVerdict::Converges) return ExtendedReal::finite(tail.estimate);
  throw Error(ErrorKind::Inconclusive, "lim omega(s) as s -> +inf is inconclusive");
}

// ---------------------------------------------------------------------------
// Axioms

struct AxiomSampling {
  Interval s_range{-10.0, 10.0};
  Interval t_range{0.0, 5.0};
  std::size_t samples = 10000;
  std::uint64_t seed = 7;
  double tol = 1e-8;
};

/// Max residuals of the semiflow axioms. Residuals compare values scaled
/// by max(1, |reference|).
struct AxiomReport {
  double identity = 0.0;
  double cocycle = 0.0;
  double inequality = 0.0;
  double monotone_in_t = 0.0;
  double monotone_in_s = 0.0;
  std::size_t samples = 0;
  double tol = 0.0;

  double worst() const {
    return std::max({identity, cocycle, inequality, monotone_in_t, monotone_in_s});
  }
  bool passes() const { return worst() <= tol; }
};

inline AxiomReport check_axioms(const RealSemiflow& phi, const AxiomSampling& grid = {}) {
  if (grid.samples == 0 || !(grid.s_range.hi >= grid.s_range.lo)) {
    throw std::invalid_argument("check_axioms: empty sample grid");
  }
  AxiomReport rep;
  rep.tol = grid.tol;
  rep.samples = grid.samples;
  std::mt19937_64 rng(grid.seed);
  std::uniform_real_distribution<double> us(grid.s_range.lo, grid.s_range.hi);
  std::uniform_real_distribution<double> ut(grid.t_range.lo, grid.t_range.hi);
  auto scaled = [](double a, double ref) { return a / std::max(1.0, std::abs(ref)); };
  for (std::size_t i = 0; i < grid.samples; ++i) {
    const double t = ut(rng), tau = ut(rng), s = us(rng), s2 = us(rng);
    const double phi_t = phi(t, s);
    const double phi_tau = phi(tau, s);
    const double phi_sum = phi(t + tau, s);
    rep.identity = std::max(rep.identity, scaled(std::abs(phi(0.0, s) - s), s));
    rep.cocycle = std::max(rep.cocycle, scaled(std::abs(phi(t, phi_tau) - phi_sum), phi_sum));
    rep.inequality = std::max(rep.inequality, scaled(std::max(0.0, phi_t - s), s));
    rep.monotone_in_t = std::max(rep.monotone_in_t, scaled(std::max(0.0, phi_sum - phi_t), phi_t));
    const double lo = std::min(s, s2), hi = std::max(s, s2);
    const double a = phi(t, lo), b = phi(t, hi);
    rep.monotone_in_s = std::max(rep.monotone_in_s, scaled(std::max(0.0, a - b), b));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Degeneracy

struct ClassifyReport {
  bool non_degenerate = true;
  std::vector<double> fixed_points;
  std::vector<OmegaReport> omegas;
  double horizon = 0.0;
  Interval window{};
};

/// Non-degenerate iff every sampled ω(s) is −∞. Fixed points are grid points
/// left in place by every probed time.
inline ClassifyReport classify(const RealSemiflow& phi, const std::vector<double>& grid,
                               double horizon, double tol = 1e-9,
                               const OmegaOptions& opt = {}) {
  ClassifyReport rep;
  rep.horizon = horizon;
  if (!grid.empty()) {
    rep.window = {*std::min_element(grid.begin(), grid.end()),
                  *std::max_element(grid.begin(), grid.end())};
  }
  static constexpr double kProbeTimes[] = {1e-3, 1e-1, 1.0, 10.0, 1e3};
  for (double s : grid) {
    rep.omegas.push_back(omega(phi, s, horizon, tol, opt));
    if (rep.omegas.back().value.is_finite()) rep.non_degenerate = false;
    bool fixed = true;
    for (double t : kProbeTimes) {
      if (std::abs(phi(t, s) - s) > tol * std::max(1.0, std::abs(s))) {
        fixed = false;
        break;
      }
    }
    if (fixed) {
      rep.fixed_points.push_back(s);
      rep.non_degenerate = false;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Hitting times and recovery of μ

struct HittingOptions {
  double t_tol = 1e-12;
  int max_doublings = 60;
};

/// The unique t(s, target) >= 0 with φ_t(s) = target, for target <= s on a
/// non-degenerate semiflow.
inline double hitting_time(const RealSemiflow& phi, double s, double target,
                           const HittingOptions& opt = {}) {
  if (target > s) {
    throw Error(ErrorKind::Undefined, "hitting time needs target <= s");
  }
  if (target == s) return 0.0;
  auto g = [&](double t) { return target - phi(t, s); };  // increasing in t
  double lo = 0.0, hi = 1.0;
  double g_lo = g(lo) /* = target − s < 0 */, g_hi = g(hi);
  int k = 0;
  while (!(g_hi >= 0.0)) {
    if (++k > opt.max_doublings) {
      throw Error(ErrorKind::HittingTimeUnbounded,
                  "phi_t(" + std::to_string(s) + ") does not reach " + std::to_string(target));
    }
    lo = hi;
    g_lo = g_hi;
    hi *= 2.0;
    g_hi = g(hi);
  }
  detail::RootOptions ro;
  ro.x_tol = opt.t_tol;
  ro.x_rtol = 4e-16;
  ro.max_iter = 500;
  return detail::solve_bracketed(g, detail::Bracket{lo, hi, g_lo, g_hi}, ro);
}

struct RecoverOptions {
  std::size_t nodes = 401;
  HittingOptions hitting{};
  double classify_horizon = 1e8;
  double classify_tol = 1e-9;
  bool require_classification = true;
};

/// Rebuilds the generating μ of a non-degenerate semiflow from hitting times:
/// μ(s) = t(s, 0) for s >= 0 and −t(0, s) for s < 0, tabulated on a uniform
/// grid over the window with monotone interpolation between nodes.
inline GrowthRate recover_mu(const RealSemiflow& phi, Interval window,
                             const RecoverOptions& opt = {}) {
  if (!(window.lo <= 0.0 && window.hi >= 0.0) || opt.nodes < 2) {
    throw std::invalid_argument("recover_mu: window must contain 0 and nodes >= 2");
  }
  std::vector<double> grid(opt.nodes);
  for (std::size_t i = 0; i < opt.nodes; ++i) {
    grid[i] = window.lo + window.width() * static_cast<double>(i) / (opt.nodes - 1);
  }
  grid.back() = window.hi;
  if (opt.require_classification) {
    const auto cls = classify(phi, grid, opt.classify_horizon, opt.classify_tol);
    if (!cls.non_degenerate) {
      throw Error(ErrorKind::NotNonDegenerate,
                  phi.name() + " has finite omega-limits or fixed points in the window");
    }
  }
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = grid[i];
    values[i] = s >= 0.0 ? hitting_time(phi, s, 0.0, opt.hitting)
                         : -hitting_time(phi, 0.0, s, opt.hitting);
  }
  return growth::tabulated(grid, values, "recovered(" + phi.name() + ")");
}

}  // namespace evosemi
