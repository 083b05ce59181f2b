#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evosemi/detail/envelope.hpp"
#include "evosemi/detail/limits.hpp"
#include "evosemi/error.hpp"
#include "evosemi/evolution_family.hpp"
#include "evosemi/growth_rate.hpp"
#include "evosemi/semiflow.hpp"
#include "evosemi/types.hpp"

namespace evosemi {

// ---------------------------------------------------------------------------
// Grid functions

/// A compactly supported ℝⁿ-valued function sampled on strictly increasing
/// nodes, linear between nodes and zero outside [nodes.front(), nodes.back()].
class GridFunction {
 public:
  GridFunction(std::vector<double> nodes, std::vector<Vector> values)
      : nodes_(std::move(nodes)), values_(std::move(values)) {
    if (nodes_.empty() || nodes_.size() != values_.size()) {
      throw Error(ErrorKind::EmptyGrid, "grid function needs matching, nonempty nodes and values");
    }
    dim_ = values_.front().size();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (values_[i].size() != dim_) {
        throw std::invalid_argument("grid function values must share one dimension");
      }
      if (i > 0 && !(nodes_[i] > nodes_[i - 1])) {
        throw std::invalid_argument("grid function nodes must be strictly increasing");
      }
      sup_norm_ = std::max(sup_norm_, values_[i].norm());
    }
  }

  static GridFunction sample(std::vector<double> nodes, const std::function<Vector(double)>& f) {
    std::vector<Vector> vals;
    vals.reserve(nodes.size());
    for (double x : nodes) vals.push_back(f(x));
    return GridFunction(std::move(nodes), std::move(vals));
  }

  static GridFunction zero(std::vector<double> nodes, Eigen::Index dim) {
    std::vector<Vector> vals(nodes.size(), Vector::Zero(dim));
    return GridFunction(std::move(nodes), std::move(vals));
  }

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<Vector>& values() const { return values_; }
  std::size_t size() const { return nodes_.size(); }
  Eigen::Index dim() const { return dim_; }
  double sup_norm() const { return sup_norm_; }
  Interval span() const { return {nodes_.front(), nodes_.back()}; }

  Vector operator()(double x) const {
    if (!(x >= nodes_.front() && x <= nodes_.back())) return Vector::Zero(dim_);
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    if (it == nodes_.end()) return values_.back();
    const std::size_t i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
    const double w = (x - nodes_[i]) / (nodes_[i + 1] - nodes_[i]);
    if (w == 0.0) return values_[i];
    return values_[i] + w * (values_[i + 1] - values_[i]);
  }

  /// max_i ‖a(s_i) − b(s_i)‖ over the nodes of a (node-index aligned when
  /// the node counts agree).
  friend double sup_distance(const GridFunction& a, const GridFunction& b) {
    double d = 0.0;
    if (a.size() == b.size()) {
      for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a.values_[i] - b.values_[i]).norm());
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a.values_[i] - b(a.nodes_[i])).norm());
    }
    return d;
  }

  GridFunction map_values(const std::function<Vector(double, const Vector&)>& f) const {
    std::vector<Vector> vals;
    vals.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) vals.push_back(f(nodes_[i], values_[i]));
    return GridFunction(nodes_, std::move(vals));
  }

 private:
  std::vector<double> nodes_;
  std::vector<Vector> values_;
  Eigen::Index dim_ = 0;
  double sup_norm_ = 0.0;
};

inline std::vector<double> uniform_nodes(Interval w, std::size_t count) {
  std::vector<double> x(count);
  for (std::size_t i = 0; i < count; ++i) {
    x[i] = w.lo + w.width() * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  x.back() = w.hi;
  return x;
}

// ---------------------------------------------------------------------------
// Context

struct ContextOptions {
  Interval window{-10.0, 10.0};  // probe window for hypotheses and the growth bound
  std::size_t bound_pairs = 1000;
  double bound_t_max = 5.0;  // closed-form flows: t range for ‖U(s, φ_t(s))‖ <= K e^{αt}
  std::uint64_t seed = 11;
  double omega_horizon = 1e6;
  double omega_tol = 1e-9;
  double ell_s_max = 1e6;
};

class SemigroupContext {
 public:
  /// Checks the C₀ hypotheses (non-degenerate with ℓ = +∞, or degenerate
  /// with lim_{s→∞} ω(s) = +∞) and fits a growth bound.
  static SemigroupContext build(EvolutionFamily family, RealSemiflow flow,
                                const ContextOptions& opt = {}) {
    SemigroupContext ctx(std::move(family), std::move(flow));
    ctx.validate(opt);
    return ctx;
  }

  /// No hypothesis checks and no growth bound.
  static SemigroupContext unchecked(EvolutionFamily family, RealSemiflow flow) {
    return SemigroupContext(std::move(family), std::move(flow));
  }

  const EvolutionFamily& family() const { return family_; }
  const RealSemiflow& flow() const { return flow_; }
  const std::optional<GrowthBound>& bound() const { return bound_; }
  bool validated() const { return validated_; }
  bool non_degenerate() const { return non_degenerate_; }
  const GrowthRate* growth_rate() const { return flow_.growth_rate(); }

 private:
  SemigroupContext(EvolutionFamily family, RealSemiflow flow)
      : family_(std::move(family)), flow_(std::move(flow)) {}

  void validate(const ContextOptions& opt) {
    std::vector<double> grid;
    const double span = std::max(std::abs(opt.window.lo), std::abs(opt.window.hi));
    for (double s = opt.window.lo; s <= opt.window.hi + 1e-12; s += opt.window.width() / 20) grid.push_back(s);
    if (const GrowthRate* mu = flow_.growth_rate()) {
      const ExtendedReal ell = mu->ell() ? *mu->ell() : classify_ell(*mu).ell;
      if (!ell.is_plus_infinity()) {
        throw Error(ErrorKind::HypothesisViolation,
                    mu->name() + " has finite ell = " + ell.str() + "; no C0-semigroup");
      }
      non_degenerate_ = true;
      const auto res = fit_growth_bound(family_, *mu, random_pairs(opt.window, opt.bound_pairs, opt.seed));
      if (!res.ok) throw Error(ErrorKind::HypothesisViolation, res.violation);
      bound_ = res.bound;
    } else {
      const auto cls = classify(flow_, grid, opt.omega_horizon, opt.omega_tol);
      non_degenerate_ = cls.non_degenerate;
      if (non_degenerate_) {
        std::vector<double> mu_probe;
        for (double s = 1.0; s <= opt.ell_s_max; s *= 2.0) mu_probe.push_back(hitting_time(flow_, s, 0.0));
        if (detail::analyze_tail(mu_probe).verdict != detail::TailVerdict::Diverges) {
          throw Error(ErrorKind::HypothesisViolation,
                      flow_.name() + ": hitting times t(s, 0) do not diverge; ell is not +inf");
        }
      } else {
        const auto lim = omega_upper_limit(flow_, std::max(1.0, span), 1e6, opt.omega_horizon,
                                           opt.omega_tol);
        if (!lim.is_plus_infinity()) {
          throw Error(ErrorKind::HypothesisViolation,
                      flow_.name() + " is degenerate with lim omega(s) = " + lim.str());
        }
      }
      bound_ = fit_flow_bound(opt);
    }
    validated_ = true;
  }

  /// ‖U(s, φ_t(s))‖ <= K e^{αt} on random (s, t).
  GrowthBound fit_flow_bound(const ContextOptions& opt) const {
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> us(opt.window.lo, opt.window.hi), ut(0.0, opt.bound_t_max);
    std::vector<detail::CloudPoint> cloud;
    for (std::size_t i = 0; i < opt.bound_pairs; ++i) {
      const double s = us(rng), t = ut(rng);
      cloud.push_back({t, std::log(op_norm(family_(s, flow_(t, s))))});
      cloud.push_back({0.0, 0.0});
    }
    const auto fit = detail::fit_envelope_line(cloud);
    GrowthBound b;
    b.K = std::exp(fit.intercept);
    b.alpha = std::max(1e-12, std::isfinite(fit.slope) ? fit.slope : 0.0);
    b.mu_name = "t";
    b.pairs = opt.bound_pairs;
    b.max_violation = fit.max_excess;
    return b;
  }

  EvolutionFamily family_;
  RealSemiflow flow_;
  std::optional<GrowthBound> bound_;
  bool validated_ = false;
  bool non_degenerate_ = false;
};

// ---------------------------------------------------------------------------
// T_t, S_t, F

/// (T_t u)(s) = U(s, φ_t(s)) u(φ_t(s)) on the nodes of u.
inline GridFunction apply_T(const SemigroupContext& ctx, double t, const GridFunction& u) {
  if (t < 0.0) throw Error(ErrorKind::Undefined, "T_t needs t >= 0");
  if (t == 0.0) return u;
  const Interval span = u.span();
  return u.map_values([&](double s, const Vector&) -> Vector {
    const double x = ctx.flow()(t, s);
    if (!span.contains(x)) return Vector::Zero(u.dim());
    const Vector ux = u(x);
    if (ux.isZero(0.0)) return ux;
    return ctx.family()(s, x) * ux;
  });
}

/// sup over nodes of ‖T_t T_τ u − T_{t+τ} u‖.
inline double check_semigroup_law(const SemigroupContext& ctx, double t, double tau,
                                  const GridFunction& u) {
  return sup_distance(apply_T(ctx, t, apply_T(ctx, tau, u)), apply_T(ctx, t + tau, u));
}

struct StrongContinuityReport {
  std::vector<double> times;
  std::vector<double> residuals;
  double tol = 0.0;
  bool passes = false;  // last residual below tol
};

inline StrongContinuityReport check_strong_continuity(const SemigroupContext& ctx,
                                                      const GridFunction& u,
                                                      const std::vector<double>& times,
                                                      double tol = 1e-3) {
  StrongContinuityReport rep;
  rep.times = times;
  rep.tol = tol;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0) || (i > 0 && !(times[i] < times[i - 1]))) {
      throw std::invalid_argument("strong-continuity times must be positive and decreasing");
    }
    rep.residuals.push_back(sup_distance(apply_T(ctx, times[i], u), u));
  }
  rep.passes = !rep.residuals.empty() && rep.residuals.back() <= tol;
  return rep;
}

/// F u = u ∘ μ⁻¹: node s_i moves to μ(s_i), values unchanged.
inline GridFunction rescale_F(const GridFunction& u, const GrowthRate& mu) {
  std::vector<double> r;
  r.reserve(u.size());
  for (double s : u.nodes()) r.push_back(mu(s));
  return GridFunction(std::move(r), u.values());
}

/// F⁻¹ v = v ∘ μ: node r_i moves to μ⁻¹(r_i).
inline GridFunction rescale_Finv(const GridFunction& v, const GrowthRate& mu) {
  std::vector<double> s;
  s.reserve(v.size());
  for (double r : v.nodes()) s.push_back(mu.invert(r));
  return GridFunction(std::move(s), v.values());
}

/// Classical evolution semigroup (S_t v)(r) = V(r, r − t) v(r − t).
inline GridFunction apply_S_classical(const EvolutionFamily& V, double t, const GridFunction& v) {
  if (t < 0.0) throw Error(ErrorKind::Undefined, "S_t needs t >= 0");
  if (t == 0.0) return v;
  const Interval span = v.span();
  return v.map_values([&](double r, const Vector&) -> Vector {
    const double x = r - t;
    if (!span.contains(x)) return Vector::Zero(v.dim());
    const Vector vx = v(x);
    if (vx.isZero(0.0)) return vx;
    return V(r, x) * vx;
  });
}

/// Node-aligned sup of ‖T_t u − F⁻¹ S_t F u‖.
inline double check_similarity(const SemigroupContext& ctx, double t, const GridFunction& u) {
  const GrowthRate* mu = ctx.growth_rate();
  if (!mu) throw Error(ErrorKind::Undefined, "similarity needs a generated flow");
  const auto V = rescaled_family(ctx.family(), *mu);
  const auto lhs = apply_T(ctx, t, u);
  const auto rhs = rescale_Finv(apply_S_classical(V, t, rescale_F(u, *mu)), *mu);
  return sup_distance(lhs, rhs);
}

// ---------------------------------------------------------------------------
// Generator probes

/// (T_h u − u) / h.
inline GridFunction apply_generator_fd(const SemigroupContext& ctx, const GridFunction& u, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("generator probe needs h > 0");
  const auto Th = apply_T(ctx, h, u);
  std::vector<Vector> vals;
  vals.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) vals.push_back((Th.values()[i] - u.values()[i]) / h);
  return GridFunction(u.nodes(), std::move(vals));
}

struct GeneratorSweep {
  std::vector<double> hs;
  std::vector<GridFunction> probes;
  std::vector<GridFunction> extrapolated;  // Richardson of probes k and k+1
  std::vector<double> increments;          // sup ‖extrapolated[k+1] − extrapolated[k]‖

  const GridFunction& best() const { return extrapolated.back(); }
};

inline std::vector<double> default_h_sweep() { return {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}; }

/// Probes at each h (decreasing) and first-order Richardson between
/// neighbours: R = (q D(h/q) − D(h)) / (q − 1).
inline GeneratorSweep generator_sweep(const SemigroupContext& ctx, const GridFunction& u,
                                      const std::vector<double>& hs = default_h_sweep()) {
  if (hs.size() < 2) throw std::invalid_argument("generator sweep needs at least two steps");
  GeneratorSweep out;
  out.hs = hs;
  for (double h : hs) out.probes.push_back(apply_generator_fd(ctx, u, h));
  for (std::size_t k = 0; k + 1 < hs.size(); ++k) {
    const double q = hs[k] / hs[k + 1];
    if (!(q > 1.0)) throw std::invalid_argument("generator sweep steps must decrease");
    std::vector<Vector> vals;
    for (std::size_t i = 0; i < u.size(); ++i) {
      vals.push_back((q * out.probes[k + 1].values()[i] - out.probes[k].values()[i]) / (q - 1.0));
    }
    out.extrapolated.emplace_back(u.nodes(), std::move(vals));
    if (k > 0) {
      out.increments.push_back(sup_distance(out.extrapolated[k], out.extrapolated[k - 1]));
    }
  }
  return out;
}

}  // namespace evosemi
