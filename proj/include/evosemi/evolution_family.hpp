#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "evosemi/detail/envelope.hpp"
#include "evosemi/detail/ode.hpp"
#include "evosemi/error.hpp"
#include "evosemi/growth_rate.hpp"
#include "evosemi/types.hpp"

namespace evosemi {

using MatrixFn2 = std::function<Matrix(double t, double s)>;
using MatrixFn1 = std::function<Matrix(double t)>;

/// An ordered pair of times, later >= earlier.
struct TimePair {
  double later;
  double earlier;
};

/// Two-parameter evolution family U(t, s), t >= s, on ℝⁿ.
///
/// OdeGenerated families solve Y' = A(t)Y by panels between consecutive
/// integers. Whole-panel propagators are memoised; the memo is shared by
/// copies and returns exactly what a fresh computation would.
class EvolutionFamily {
 public:
  static EvolutionFamily closed_form(std::size_t dim, MatrixFn2 map,
                                     std::string name = "closed_form") {
    return EvolutionFamily(dim, ClosedForm{std::move(map)}, std::move(name));
  }

  static EvolutionFamily ode(std::size_t dim, MatrixFn1 coefficient,
                             detail::IntegratorOptions integrator = {},
                             std::string name = "ode") {
    auto state = std::make_shared<OdeState>();
    state->coefficient = std::move(coefficient);
    state->options = integrator;
    return EvolutionFamily(dim, OdeGenerated{std::move(state)}, std::move(name));
  }

  std::size_t dim() const { return dim_; }
  const std::string& name() const { return name_; }
  bool is_ode() const { return std::holds_alternative<OdeGenerated>(kind_); }

  /// A(t) for ODE-generated families.
  Matrix coefficient(double t) const {
    if (auto* o = std::get_if<OdeGenerated>(&kind_)) return o->state->coefficient(t);
    throw Error(ErrorKind::Undefined, name_ + " has no coefficient map");
  }

  const detail::IntegratorOptions* integrator_options() const {
    if (auto* o = std::get_if<OdeGenerated>(&kind_)) return &o->state->options;
    return nullptr;
  }

  /// U(t, s).
  Matrix operator()(double t, double s) const { return transition(t, s); }

  Matrix transition(double t, double s) const {
    if (t < s) {
      throw Error(ErrorKind::TimeOrderViolation,
                  "U(t,s) needs t >= s, got t = " + std::to_string(t) +
                      ", s = " + std::to_string(s));
    }
    const auto n = static_cast<Eigen::Index>(dim_);
    if (t == s) return Matrix::Identity(n, n);
    if (auto* c = std::get_if<ClosedForm>(&kind_)) return c->map(t, s);
    return propagate(*std::get<OdeGenerated>(kind_).state, t, s);
  }

  std::size_t cached_panels() const {
    if (auto* o = std::get_if<OdeGenerated>(&kind_)) {
      std::shared_lock lock(o->state->mutex);
      return o->state->panels.size();
    }
    return 0;
  }

 private:
  struct ClosedForm {
    MatrixFn2 map;
  };
  struct OdeState {
    MatrixFn1 coefficient;
    detail::IntegratorOptions options;
    mutable std::shared_mutex mutex;
    std::map<long, Matrix> panels;  // k ↦ U(k+1, k)
  };
  struct OdeGenerated {
    std::shared_ptr<OdeState> state;
  };

  EvolutionFamily(std::size_t dim, std::variant<ClosedForm, OdeGenerated> kind, std::string name)
      : dim_(dim), kind_(std::move(kind)), name_(std::move(name)) {}

  Matrix segment(const OdeState& st, double t, double s) const {
    const auto n = static_cast<Eigen::Index>(dim_);
    return detail::propagate_dopri5(st.coefficient, s, t, Matrix::Identity(n, n), st.options);
  }

  Matrix panel(OdeState& st, long k) const {
    {
      std::shared_lock lock(st.mutex);
      auto it = st.panels.find(k);
      if (it != st.panels.end()) return it->second;
    }
    Matrix m = segment(st, static_cast<double>(k + 1), static_cast<double>(k));
    std::unique_lock lock(st.mutex);
    return st.panels.emplace(k, std::move(m)).first->second;
  }

  Matrix propagate(OdeState& st, double t, double s) const {
    const double k_lo = std::ceil(s);
    const double k_hi = std::floor(t);
    if (k_lo > k_hi) return segment(st, t, s);  // no integer strictly inside
    Matrix out = segment(st, k_lo, s);
    for (long k = static_cast<long>(k_lo); k < static_cast<long>(k_hi); ++k) {
      out = panel(st, k) * out;
    }
    return segment(st, t, k_hi) * out;
  }

  std::size_t dim_;
  std::variant<ClosedForm, OdeGenerated> kind_;
  std::string name_;
};

inline Matrix transition(const EvolutionFamily& U, double t, double s) { return U(t, s); }

/// V(t, s) = U(μ⁻¹(t), μ⁻¹(s)).
inline EvolutionFamily rescaled_family(const EvolutionFamily& U, const GrowthRate& mu) {
  return EvolutionFamily::closed_form(
      U.dim(), [U, mu](double t, double s) { return U(mu.invert(t), mu.invert(s)); },
      "rescaled(" + U.name() + ", " + mu.name() + ")");
}

// ---------------------------------------------------------------------------
// Cocycle law

struct TimeTriple {
  double t, tau, t0;
};

struct CocycleReport {
  double max_residual = 0.0;
  TimeTriple worst{0, 0, 0};
  std::size_t triples = 0;
};

inline CocycleReport check_cocycle(const EvolutionFamily& U, const std::vector<TimeTriple>& triples) {
  CocycleReport rep;
  rep.triples = triples.size();
  for (const auto& tr : triples) {
    if (!(tr.t >= tr.tau && tr.tau >= tr.t0)) {
      throw Error(ErrorKind::TimeOrderViolation, "cocycle triple must satisfy t >= tau >= t0");
    }
    const double r = op_norm(U(tr.t, tr.tau) * U(tr.tau, tr.t0) - U(tr.t, tr.t0));
    if (r > rep.max_residual) {
      rep.max_residual = r;
      rep.worst = tr;
    }
  }
  return rep;
}

inline std::vector<TimeTriple> random_triples(Interval w, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(w.lo, w.hi);
  std::vector<TimeTriple> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double a = u(rng), b = u(rng), c = u(rng);
    if (a < b) std::swap(a, b);
    if (b < c) std::swap(b, c);
    if (a < b) std::swap(a, b);
    out.push_back({a, b, c});
  }
  return out;
}

inline std::vector<TimePair> random_pairs(Interval w, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(w.lo, w.hi);
  std::vector<TimePair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double a = u(rng), b = u(rng);
    if (a < b) std::swap(a, b);
    out.push_back({a, b});
  }
  return out;
}

/// Grid-Lipschitz proxy for strong continuity: max ‖U(t+h, s) − U(t, s)‖ / h
/// and the same in s, over a uniform grid of the window.
inline double continuity_modulus(const EvolutionFamily& U, Interval w, std::size_t nodes, double h) {
  double mod = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double t = w.lo + w.width() * i / std::max<std::size_t>(1, nodes - 1);
      const double s = w.lo + w.width() * j / std::max<std::size_t>(1, nodes - 1);
      const Matrix base = U(t, s);
      mod = std::max(mod, op_norm(U(t + h, s) - base) / h);
      if (t - s >= h) mod = std::max(mod, op_norm(U(t, s + h) - base) / h);
    }
  }
  return mod;
}

// ---------------------------------------------------------------------------
// μ-growth bound ‖U(t, s)‖ <= K e^{α(μ(t) − μ(s))}

struct GrowthBound {
  double K = 1.0;
  double alpha = 0.0;
  std::string mu_name;
  std::size_t pairs = 0;
  double max_violation = 0.0;  // max of ln‖U‖ − ln K − α d over the grid (<= 0 when valid)
};

struct GrowthBoundOptions {
  double alpha_floor = 1e-12;  // α must be > 0
  double divergence_ratio = 2.0;
  bool include_diagonal = true;
};

struct GrowthBoundResult {
  bool ok = false;
  GrowthBound bound;
  std::string violation;
  std::vector<double> nested_alphas;  // full, half, quarter window
  std::vector<detail::CloudPoint> cloud;
  std::vector<detail::CloudPoint> envelope;
};

namespace detail {

inline std::vector<CloudPoint> growth_cloud(const EvolutionFamily& U, const GrowthRate& mu,
                                            const std::vector<TimePair>& pairs,
                                            bool include_diagonal) {
  std::vector<CloudPoint> cloud;
  cloud.reserve(pairs.size() * (include_diagonal ? 2 : 1));
  std::vector<double> diag;
  for (const auto& p : pairs) {
    if (p.later < p.earlier) {
      throw Error(ErrorKind::TimeOrderViolation, "growth-bound pair out of order");
    }
    const double d = mu(p.later) - mu(p.earlier);
    cloud.push_back({d, std::log(op_norm(U(p.later, p.earlier)))});
    if (include_diagonal) diag.push_back(p.earlier);
  }
  for (double s : diag) cloud.push_back({0.0, std::log(op_norm(U(s, s)))});
  return cloud;
}

}  // namespace detail

/// Fits the lexicographically smallest (K, α) with ln‖U(t,s)‖ <= ln K + α d
/// over the pairs: K is pinned by the t = s column (K >= 1), α is the
/// envelope tangent from (0, ln K). The fit is repeated on the half and
/// quarter windows; α growing by more than `divergence_ratio` at each
/// widening is reported as an unbounded slope.
inline GrowthBoundResult fit_growth_bound(const EvolutionFamily& U, const GrowthRate& mu,
                                          const std::vector<TimePair>& pairs,
                                          const GrowthBoundOptions& opt = {}) {
  if (pairs.empty()) throw Error(ErrorKind::EmptyGrid, "fit_growth_bound: no pairs");
  GrowthBoundResult res;
  res.cloud = detail::growth_cloud(U, mu, pairs, opt.include_diagonal);
  const auto fit = detail::fit_envelope_line(res.cloud);
  res.envelope = fit.envelope;
  res.bound.K = std::exp(fit.intercept);
  res.bound.alpha = std::max(opt.alpha_floor, std::isfinite(fit.slope) ? fit.slope : 0.0);
  res.bound.mu_name = mu.name();
  res.bound.pairs = pairs.size();
  double viol = -kInf;
  for (const auto& p : res.cloud) {
    viol = std::max(viol, p.L - fit.intercept - res.bound.alpha * p.d);
  }
  res.bound.max_violation = viol;

  // Nested-window slope study.
  double lo = kInf, hi = -kInf;
  for (const auto& p : pairs) {
    lo = std::min(lo, p.earlier);
    hi = std::max(hi, p.later);
  }
  const double c = 0.5 * (lo + hi), w = 0.5 * (hi - lo);
  for (int j = 0; j < 3; ++j) {
    const double half = w / std::ldexp(1.0, j);
    std::vector<detail::CloudPoint> sub;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (pairs[i].earlier >= c - half && pairs[i].later <= c + half) sub.push_back(res.cloud[i]);
    }
    if (opt.include_diagonal) sub.push_back({0.0, 0.0});
    const auto f = detail::fit_envelope_line(sub);
    res.nested_alphas.push_back(std::isfinite(f.slope) ? f.slope : 0.0);
  }
  const auto& a = res.nested_alphas;
  const bool diverges = a[2] > 0.0 && a[1] > opt.divergence_ratio * a[2] &&
                        a[0] > opt.divergence_ratio * a[1];
  if (diverges) {
    res.violation = "fitted slope grows with the window (" + std::to_string(a[2]) + " -> " +
                    std::to_string(a[1]) + " -> " + std::to_string(a[0]) +
                    "): no finite alpha bounds the cloud under " + mu.name();
    res.ok = false;
  } else {
    res.ok = true;
  }
  return res;
}

}  // namespace evosemi
