#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evosemi/detail/envelope.hpp"
#include "evosemi/detail/quadrature.hpp"
#include "evosemi/error.hpp"
#include "evosemi/evo_semigroup.hpp"
#include "evosemi/evolution_family.hpp"
#include "evosemi/growth_rate.hpp"
#include "evosemi/types.hpp"

namespace evosemi {

// ---------------------------------------------------------------------------
// Projection fields

/// t ↦ P(t), idempotent n×n; Q(t) = Id − P(t).
class ProjectionField {
 public:
  static ProjectionField closed_form(std::size_t dim, MatrixFn1 map, std::string name = "P") {
    return ProjectionField(dim, std::move(map), std::move(name));
  }

  static ProjectionField constant(Matrix P, std::string name = "constant") {
    const auto n = static_cast<std::size_t>(P.rows());
    return ProjectionField(n, [P](double) { return P; }, std::move(name));
  }

  /// Nearest-node lookup on strictly increasing nodes.
  static ProjectionField tabulated(std::vector<double> nodes, std::vector<Matrix> mats,
                                   std::string name = "tabulated") {
    if (nodes.empty() || nodes.size() != mats.size()) {
      throw Error(ErrorKind::EmptyGrid, "tabulated projection needs matching nodes and matrices");
    }
    const auto n = static_cast<std::size_t>(mats.front().rows());
    auto tab = std::make_shared<const std::pair<std::vector<double>, std::vector<Matrix>>>(
        std::move(nodes), std::move(mats));
    return ProjectionField(
        n,
        [tab](double t) {
          const auto& x = tab->first;
          auto it = std::lower_bound(x.begin(), x.end(), t);
          std::size_t i = static_cast<std::size_t>(it - x.begin());
          if (i == x.size()) {
            i = x.size() - 1;
          } else if (i > 0 && t - x[i - 1] <= x[i] - t) {
            --i;
          }
          return tab->second[i];
        },
        std::move(name));
  }

  std::size_t dim() const { return dim_; }
  const std::string& name() const { return name_; }
  Matrix P(double t) const { return map_(t); }
  Matrix Q(double t) const {
    const auto n = static_cast<Eigen::Index>(dim_);
    return Matrix::Identity(n, n) - map_(t);
  }
  Matrix operator()(double t) const { return map_(t); }

 private:
  ProjectionField(std::size_t dim, MatrixFn1 map, std::string name)
      : dim_(dim), map_(std::move(map)), name_(std::move(name)) {}

  std::size_t dim_;
  MatrixFn1 map_;
  std::string name_;
};

/// P(μ⁻¹(t)), the projection field of the rescaled family.
inline ProjectionField rescaled_projection(const ProjectionField& P, const GrowthRate& mu) {
  return ProjectionField::closed_form(
      P.dim(), [P, mu](double t) { return P(mu.invert(t)); }, P.name() + "∘mu^-1");
}

inline int projection_rank(const Matrix& P) { return static_cast<int>(std::lround(P.trace())); }

struct ProjectionCheck {
  double idempotency = 0.0;  // max ‖P² − P‖
  int rank_min = 0;
  int rank_max = 0;
  double max_norm = 0.0;
  bool ok(double tol = 1e-10) const { return idempotency <= tol && rank_min == rank_max; }
};

inline ProjectionCheck check_projection(const ProjectionField& P, const std::vector<double>& times) {
  ProjectionCheck c;
  c.rank_min = static_cast<int>(P.dim()) + 1;
  c.rank_max = -1;
  for (double t : times) {
    const Matrix p = P(t);
    c.idempotency = std::max(c.idempotency, op_norm(p * p - p));
    const int r = projection_rank(p);
    c.rank_min = std::min(c.rank_min, r);
    c.rank_max = std::max(c.rank_max, r);
    c.max_norm = std::max(c.max_norm, op_norm(p));
  }
  return c;
}

namespace detail {

/// Orthonormal basis of range Q(t) (columns), k = n − rank P(t).
inline Matrix complement_basis(const Matrix& Q, int k) {
  if (k == 0) return Matrix(Q.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(Q, Eigen::ComputeFullU);
  return svd.matrixU().leftCols(k);
}

struct Restriction {
  Matrix M;            // U(later, earlier) from range Q(earlier) to range Q(later), in bases
  Matrix B_earlier, B_later;
  double min_singular = kInf;
};

inline Restriction restrict_to_complement(const EvolutionFamily& U, const ProjectionField& P,
                                          double later, double earlier) {
  Restriction r;
  const Matrix Qe = P.Q(earlier), Ql = P.Q(later);
  const int k = static_cast<int>(P.dim()) - projection_rank(P(earlier));
  if (static_cast<int>(P.dim()) - projection_rank(P(later)) != k) {
    throw Error(ErrorKind::RankMismatch, "rank of P differs between " + std::to_string(earlier) +
                                             " and " + std::to_string(later));
  }
  r.B_earlier = complement_basis(Qe, k);
  r.B_later = complement_basis(Ql, k);
  if (k == 0) {
    r.M = Matrix(0, 0);
    return r;
  }
  r.M = r.B_later.transpose() * U(later, earlier) * r.B_earlier;
  Eigen::JacobiSVD<Matrix> svd(r.M);
  r.min_singular = svd.singularValues()(k - 1);
  return r;
}

/// U_Q(earlier, later) Q(later): the inverse of the restricted forward map,
/// obtained by a linear solve.
inline Matrix backward_on_complement(const EvolutionFamily& U, const ProjectionField& P,
                                     double later, double earlier, double floor) {
  const auto r = restrict_to_complement(U, P, later, earlier);
  const auto n = static_cast<Eigen::Index>(P.dim());
  if (r.M.size() == 0) return Matrix::Zero(n, n);
  if (r.min_singular < floor) {
    throw Error(ErrorKind::SingularRestriction,
                "restricted map on ker P is singular between " + std::to_string(earlier) + " and " +
                    std::to_string(later) + " (sigma_min = " + std::to_string(r.min_singular) + ")");
  }
  const Matrix rhs = r.B_later.transpose() * P.Q(later);
  return r.B_earlier * r.M.fullPivLu().solve(rhs);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Compatibility

struct CompatibilityReport {
  double max_commutation = 0.0;  // max ‖P(t)U(t,s) − U(t,s)P(s)‖
  double min_restricted_singular = kInf;
  double floor = 1e-10;
  int rank = 0;
  std::size_t pairs = 0;
  bool invertible() const { return min_restricted_singular >= floor; }
  bool passes(double tol) const { return max_commutation <= tol && invertible(); }
};

inline CompatibilityReport check_compatibility(const EvolutionFamily& U, const ProjectionField& P,
                                               const std::vector<TimePair>& pairs,
                                               double floor = 1e-10) {
  CompatibilityReport rep;
  rep.floor = floor;
  rep.pairs = pairs.size();
  bool first = true;
  for (const auto& p : pairs) {
    if (p.later < p.earlier) throw Error(ErrorKind::TimeOrderViolation, "compatibility pair out of order");
    const Matrix u = U(p.later, p.earlier);
    const Matrix Pt = P(p.later), Ps = P(p.earlier);
    rep.max_commutation = std::max(rep.max_commutation, op_norm(Pt * u - u * Ps));
    const int rt = projection_rank(Pt), rs = projection_rank(Ps);
    if (first) {
      rep.rank = rs;
      first = false;
    }
    if (rt != rep.rank || rs != rep.rank) {
      throw Error(ErrorKind::RankMismatch, "rank of P varies over the pairs (" + std::to_string(rep.rank) +
                                               " vs " + std::to_string(rt == rep.rank ? rs : rt) + ")");
    }
    const auto r = detail::restrict_to_complement(U, P, p.later, p.earlier);
    rep.min_restricted_singular = std::min(rep.min_restricted_singular, r.min_singular);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Certification

struct DichotomyCertificate {
  ProjectionField projections;
  double N = 1.0;
  double nu = 0.0;
  std::string mu_name;
  std::size_t pairs = 0;
  double slack_P = 0.0;  // max of L₁ − (ln N − ν d); <= 0 on success
  double slack_Q = 0.0;
  std::vector<detail::CloudPoint> cloud_P;
  std::vector<detail::CloudPoint> cloud_Q;
};

struct DichotomyViolation {
  TimePair pair;
  double d;
  double L;
  char which;  // 'P' or 'Q'
};

struct DichotomyResult {
  bool ok = false;
  std::optional<DichotomyCertificate> certificate;
  double N = 1.0;
  double nu = 0.0;
  std::string violation;
  std::vector<DichotomyViolation> violations;  // worst offenders when !ok
};

struct DichotomyOptions {
  double singular_floor = 1e-10;
  double nu_min = 0.0;  // ν must exceed this
  std::size_t max_reported_violations = 10;
};

/// Fits the largest ν, with ln N pinned by ‖P(s)‖ and ‖Q(s)‖ at d = 0, such
/// that ln‖U(t,s)P(s)‖ and ln‖U_Q(s,t)Q(t)‖ stay below ln N − ν(μ(t) − μ(s)).
inline DichotomyResult certify_dichotomy(const EvolutionFamily& U, const GrowthRate& mu,
                                         const ProjectionField& P, const std::vector<TimePair>& pairs,
                                         const DichotomyOptions& opt = {}) {
  if (pairs.empty()) throw Error(ErrorKind::EmptyGrid, "certify_dichotomy: no pairs");
  DichotomyCertificate cert{P, 1.0, 0.0, mu.name(), pairs.size(), 0.0, 0.0, {}, {}};
  std::vector<detail::CloudPoint> all;
  std::vector<std::pair<std::size_t, char>> origin;  // index into pairs for each cloud point
  auto push = [&](std::vector<detail::CloudPoint>& cloud, double d, double norm, std::size_t i, char w) {
    if (!(norm > 0.0)) return;  // vacuous inequality
    cloud.push_back({d, std::log(norm)});
    all.push_back(cloud.back());
    origin.emplace_back(i, w);
  };
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (p.later < p.earlier) throw Error(ErrorKind::TimeOrderViolation, "dichotomy pair out of order");
    const double d = mu(p.later) - mu(p.earlier);
    push(cert.cloud_P, d, op_norm(U(p.later, p.earlier) * P(p.earlier)), i, 'P');
    push(cert.cloud_Q, d,
         op_norm(detail::backward_on_complement(U, P, p.later, p.earlier, opt.singular_floor)), i, 'Q');
    push(cert.cloud_P, 0.0, op_norm(P(p.earlier)), i, 'p');
    push(cert.cloud_Q, 0.0, op_norm(P.Q(p.earlier)), i, 'q');
  }
  const auto fit = detail::fit_envelope_line(all);
  DichotomyResult res;
  res.N = std::exp(fit.intercept);
  res.nu = std::isfinite(fit.slope) ? -fit.slope : kInf;
  if (!std::isfinite(res.nu)) res.nu = 1.0;  // only d = 0 points: any ν works
  cert.N = res.N;
  cert.nu = res.nu;
  auto slack = [&](const std::vector<detail::CloudPoint>& c) {
    double s = -kInf;
    for (const auto& q : c) s = std::max(s, q.L - fit.intercept + res.nu * q.d);
    return s;
  };
  cert.slack_P = slack(cert.cloud_P);
  cert.slack_Q = slack(cert.cloud_Q);
  if (res.nu > opt.nu_min) {
    res.ok = true;
    res.certificate = std::move(cert);
    return res;
  }
  res.violation = "no decay rate: fitted nu = " + std::to_string(res.nu) + " under " + mu.name();
  std::vector<std::size_t> idx(all.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto excess = [&](std::size_t i) { return all[i].L - fit.intercept - opt.nu_min * all[i].d; };
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return excess(a) > excess(b); });
  for (std::size_t k = 0; k < idx.size() && res.violations.size() < opt.max_reported_violations; ++k) {
    const std::size_t i = idx[k];
    if (excess(i) <= 0.0) break;
    const char w = origin[i].second == 'p' ? 'P' : origin[i].second == 'q' ? 'Q' : origin[i].second;
    res.violations.push_back({pairs[origin[i].first], all[i].d, all[i].L, w});
  }
  return res;
}

// ---------------------------------------------------------------------------
// Green function

/// Γ(t, s) = U(t,s)P(s) for t > s and −U_Q(t,s)Q(s) for t < s.
inline Matrix green(const EvolutionFamily& U, const ProjectionField& P, double t, double s,
                    double floor = 1e-10) {
  if (t == s) throw Error(ErrorKind::Undefined, "Green function is not defined on t = s");
  if (t > s) return U(t, s) * P(s);
  return -detail::backward_on_complement(U, P, s, t, floor);
}

/// max over pairs of ‖Γ(t,s)‖ / (N e^{−ν|μ(t) − μ(s)|}); <= 1 on certified grids.
inline double green_decay_ratio(const EvolutionFamily& U, const GrowthRate& mu,
                                const DichotomyCertificate& cert, const std::vector<TimePair>& pairs) {
  double worst = 0.0;
  for (const auto& p : pairs) {
    if (p.later == p.earlier) continue;
    const double bound = cert.N * std::exp(-cert.nu * std::abs(mu(p.later) - mu(p.earlier)));
    worst = std::max(worst, op_norm(green(U, cert.projections, p.later, p.earlier)) / bound);
    worst = std::max(worst, op_norm(green(U, cert.projections, p.earlier, p.later)) / bound);
  }
  return worst;
}

namespace detail {

inline std::vector<double> breaks_in(const std::vector<double>& candidates, double a, double b) {
  std::vector<double> out;
  for (double x : candidates) {
    if (x > a && x < b) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline void require_derivative(const GrowthRate& mu) {
  if (!mu.has_derivative()) {
    throw Error(ErrorKind::Undefined, mu.name() + " has no derivative; the Green formula needs mu'");
  }
}

}  // namespace detail

struct GreenSolveOptions {
  detail::QuadratureOptions quadrature{1e-10, 0.0, 20000};
  double singular_floor = 1e-10;
  std::vector<double> extra_breaks;
  bool split_at_f_nodes = true;  // f is only piecewise linear
};

/// u(t) = −∫ μ′(ξ) Γ(t, ξ) f(ξ) dξ at each output node, over f's support.
inline GridFunction solve_green(const EvolutionFamily& U, const GrowthRate& mu,
                                const DichotomyCertificate& cert, const GridFunction& f,
                                const std::vector<double>& out_nodes,
                                const GreenSolveOptions& opt = {}) {
  detail::require_derivative(mu);
  const Interval sup = f.span();
  std::vector<Vector> vals;
  vals.reserve(out_nodes.size());
  for (double t : out_nodes) {
    auto integrand = [&](double xi) -> Vector {
      const Vector fx = f(xi);
      if (fx.isZero(0.0)) return Vector::Zero(f.dim());
      return -mu.derivative(xi) * (green(U, cert.projections, t, xi, opt.singular_floor) * fx);
    };
    std::vector<double> cand = mu.kinks();
    cand.push_back(t);
    cand.insert(cand.end(), opt.extra_breaks.begin(), opt.extra_breaks.end());
    if (opt.split_at_f_nodes) cand.insert(cand.end(), f.nodes().begin(), f.nodes().end());
    const auto r = detail::integrate_adaptive<Vector>(integrand, sup.lo, sup.hi,
                                                      detail::breaks_in(cand, sup.lo, sup.hi),
                                                      opt.quadrature);
    if (!r.converged) {
      throw Error(ErrorKind::QuadratureBudgetExceeded,
                  "Green quadrature at t = " + std::to_string(t) + " stopped with error estimate " +
                      std::to_string(r.error));
    }
    vals.push_back(r.value);
  }
  return GridFunction(out_nodes, std::move(vals));
}

inline GridFunction solve_green(const EvolutionFamily& U, const GrowthRate& mu,
                                const DichotomyCertificate& cert, const GridFunction& f,
                                const GreenSolveOptions& opt = {}) {
  return solve_green(U, mu, cert, f, f.nodes(), opt);
}

// ---------------------------------------------------------------------------
// Integral equation u(t) = U(t,s)u(s) + ∫ₛᵗ μ′(ξ)U(t,ξ)f(ξ)dξ

struct IntegralEquationReport {
  double max_residual = 0.0;
  TimePair worst{0.0, 0.0};
  std::vector<double> residuals;
  std::size_t skipped = 0;  // pairs outside the node span of u
};

inline IntegralEquationReport verify_integral_equation(const EvolutionFamily& U, const GrowthRate& mu,
                                                       const GridFunction& u, const GridFunction& f,
                                                       const std::vector<TimePair>& pairs,
                                                       const GreenSolveOptions& opt = {}) {
  detail::require_derivative(mu);
  IntegralEquationReport rep;
  const Interval span = u.span();
  const Interval fs = f.span();
  for (const auto& p : pairs) {
    if (p.later < p.earlier) throw Error(ErrorKind::TimeOrderViolation, "integral-equation pair out of order");
    if (!span.contains(p.later) || !span.contains(p.earlier)) {
      ++rep.skipped;
      continue;
    }
    const double t = p.later, s = p.earlier;
    Vector integral = Vector::Zero(u.dim());
    const double a = std::max(s, fs.lo), b = std::min(t, fs.hi);
    if (a < b) {
      auto integrand = [&](double xi) -> Vector {
        const Vector fx = f(xi);
        if (fx.isZero(0.0)) return Vector::Zero(f.dim());
        return mu.derivative(xi) * (U(t, xi) * fx);
      };
      std::vector<double> cand = mu.kinks();
      cand.insert(cand.end(), opt.extra_breaks.begin(), opt.extra_breaks.end());
      if (opt.split_at_f_nodes) cand.insert(cand.end(), f.nodes().begin(), f.nodes().end());
      const auto r = detail::integrate_adaptive<Vector>(integrand, a, b, detail::breaks_in(cand, a, b),
                                                        opt.quadrature);
      if (!r.converged) {
        throw Error(ErrorKind::QuadratureBudgetExceeded, "integral-equation quadrature did not converge");
      }
      integral = r.value;
    }
    const double res = (u(t) - U(t, s) * u(s) - integral).norm();
    rep.residuals.push_back(res);
    if (res > rep.max_residual) {
      rep.max_residual = res;
      rep.worst = p;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Projection inference

struct InferenceOptions {
  double horizon = 6.0;     // μ-distance over which growth is measured
  std::size_t nodes = 21;   // tabulation nodes across the window
  double gap = 0.2;         // rescaled exponents must clear ±gap/2
};

struct ProjectionCandidate {
  ProjectionField field;
  std::vector<double> exponents;  // μ-rescaled growth exponents at the window centre
  double separation = 0.0;        // smallest |exponent|
  double confidence = 0.0;        // separation / (gap/2), capped at 1
  bool heuristic = true;
};

/// Splits ℝⁿ at each node t into directions contracting over [t, t + Δ] and
/// directions expanding over [t − Δ, t], Δ chosen so that μ advances by the
/// horizon; P(t) projects onto the first along the second.
inline ProjectionCandidate infer_projection_heuristic(const EvolutionFamily& U, const GrowthRate& mu,
                                                      Interval window, const InferenceOptions& opt = {}) {
  const auto n = static_cast<Eigen::Index>(U.dim());
  std::vector<double> nodes = uniform_nodes(window, std::max<std::size_t>(opt.nodes, 2));
  std::vector<Matrix> mats;
  std::vector<double> centre_exponents;
  double separation = kInf;
  const std::size_t centre = nodes.size() / 2;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double t = nodes[k];
    const double fwd = mu.invert(mu(t) + opt.horizon);
    const double bwd = mu.invert(mu(t) - opt.horizon);
    Eigen::JacobiSVD<Matrix> f(U(fwd, t), Eigen::ComputeFullV);
    Eigen::JacobiSVD<Matrix> b(U(t, bwd), Eigen::ComputeFullU);
    std::vector<double> ex;
    int stable = 0, unstable = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double lf = std::log(f.singularValues()(i)) / opt.horizon;
      const double lb = std::log(b.singularValues()(i)) / opt.horizon;
      ex.push_back(lf);
      separation = std::min(separation, std::abs(lf));
      if (lf <= -opt.gap / 2) ++stable;
      if (lb >= opt.gap / 2) ++unstable;
    }
    if (stable + unstable != n) {
      throw Error(ErrorKind::Inconclusive,
                  "growth exponents at t = " + std::to_string(t) + " are not separated by the gap " +
                      std::to_string(opt.gap));
    }
    if (k == centre) centre_exponents = ex;
    // Singular values are sorted descending: the trailing right singular
    // vectors of the forward map contract, the leading left singular vectors
    // of the backward map expand.
    Matrix basis(n, n);
    basis.leftCols(stable) = f.matrixV().rightCols(stable);
    basis.rightCols(unstable) = b.matrixU().leftCols(unstable);
    Matrix D = Matrix::Zero(n, n);
    for (int i = 0; i < stable; ++i) D(i, i) = 1.0;
    Eigen::FullPivLU<Matrix> lu(basis);
    if (!lu.isInvertible()) {
      throw Error(ErrorKind::Inconclusive, "stable and unstable directions are not complementary at t = " +
                                               std::to_string(t));
    }
    mats.push_back(basis * D * lu.inverse());
  }
  ProjectionCandidate out{ProjectionField::tabulated(nodes, std::move(mats), "inferred"),
                          std::move(centre_exponents), separation,
                          std::min(1.0, separation / (opt.gap / 2)), true};
  return out;
}

}  // namespace evosemi
