#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "evosemi/cli/scenario.hpp"

namespace evosemi::cli {

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct PipelineResult {
  std::string name;
  bool passed = false;
  std::string summary;
  json report;
  std::vector<Table> tables;
};

struct RunOptions {
  std::filesystem::path out_dir = ".";
  bool write_files = true;
};

struct RunOutcome {
  std::vector<PipelineResult> results;
  bool all_passed() const {
    for (const auto& r : results) {
      if (!r.passed) return false;
    }
    return true;
  }
};

/// JSON number, or "+inf" / "-inf" / "nan".
inline json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "+inf" : "-inf";
}

inline json num(const ExtendedReal& x) { return num(x.value()); }

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

namespace detail {

inline std::vector<std::string> value_columns(const std::string& stem, Eigen::Index n) {
  std::vector<std::string> h;
  for (Eigen::Index i = 0; i < n; ++i) h.push_back(stem + std::to_string(i + 1));
  return h;
}

inline Table grid_table(const std::string& name, const std::string& node, const std::string& stem,
                        const GridFunction& g) {
  Table t{name, {node}, {}};
  for (auto& h : value_columns(stem, g.dim())) t.header.push_back(h);
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<double> row{g.nodes()[i]};
    for (Eigen::Index k = 0; k < g.dim(); ++k) row.push_back(g.values()[i](k));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table cloud_table(const std::string& name, const std::vector<::evosemi::detail::CloudPoint>& c) {
  Table t{name, {"d", "L"}, {}};
  for (const auto& p : c) t.rows.push_back({p.d, p.L});
  return t;
}

inline double bump(double x, double lo, double hi) {
  if (x <= lo || x >= hi) return 0.0;
  const double y = (2.0 * x - lo - hi) / (hi - lo);
  return std::exp(1.0 - 1.0 / (1.0 - y * y));
}

}  // namespace detail

class Runner {
 public:
  explicit Runner(const Scenario& sc) : sc_(sc) {}

  PipelineResult run(const std::string& name) {
    PipelineResult r;
    r.name = name;
    r.report["scenario"] = sc_.name;
    r.report["pipeline"] = name;
    try {
      if (name == "classify-semiflow") classify_semiflow(r);
      else if (name == "recover-mu") recover(r);
      else if (name == "check-family") check_family(r);
      else if (name == "fit-growth-bound") fit_bound(r);
      else if (name == "check-semigroup") check_semigroup(r);
      else if (name == "check-similarity") check_sim(r);
      else if (name == "certify-dichotomy") certify(r);
      else if (name == "solve-green") solve(r);
      else if (name == "verify-integral-equation") verify(r);
      else throw Error(ErrorKind::ConfigError, "unknown pipeline " + name);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ConfigError) throw;
      r.passed = false;
      r.summary = e.what();
      r.report["error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
    } catch (const std::exception& e) {
      r.passed = false;
      r.summary = e.what();
      r.report["error"] = {{"kind", "exception"}, {"message", e.what()}};
    }
    r.report["status"] = r.passed ? "pass" : "fail";
    r.report["summary"] = r.summary;
    json tables = json::array();
    for (const auto& t : r.tables) tables.push_back(table_file(r.name, t));
    r.report["tables"] = tables;
    return r;
  }

  std::string table_file(const std::string& pipeline, const Table& t) const {
    return sc_.name + "." + pipeline + "." + t.name + ".csv";
  }

 private:
  double tol(const std::string& k) const { return sc_.tolerances.at(k); }

  void residual(PipelineResult& r, const std::string& key, double value) {
    r.report["residuals"][key] = {{"max", num(value)}, {"tolerance", tol(key)}};
    const bool ok = value <= tol(key);
    r.passed = r.passed && ok;
    if (!r.summary.empty()) r.summary += "; ";
    r.summary += key + " " + sci(value) + (ok ? " <= " : " > ") + sci(tol(key));
  }

  std::vector<TimePair> pairs() const { return random_pairs(sc_.window, sc_.pairs, sc_.seed); }

  void classify_semiflow(PipelineResult& r) {
    const auto& phi = *sc_.flow;
    std::vector<double> grid = uniform_nodes(sc_.window, 21);
    const auto cls = ::evosemi::classify(phi, grid, 1e6);
    r.report["semiflow"] = sc_.flow_label;
    r.report["classification"] = cls.non_degenerate ? "NonDegenerate" : "Degenerate";
    r.report["probe_window"] = {sc_.window.lo, sc_.window.hi};
    r.report["horizon"] = cls.horizon;
    json fixed = json::array();
    for (double x : cls.fixed_points) fixed.push_back(x);
    r.report["fixed_points"] = fixed;
    Table om{"omega", {"s", "omega", "last_increment"}, {}};
    json oms = json::array();
    for (const auto& o : cls.omegas) {
      om.rows.push_back({o.s, o.value.value(), o.last_increment});
      oms.push_back({{"s", o.s}, {"omega", num(o.value)}});
    }
    r.report["omega"] = oms;
    if (!cls.non_degenerate) {
      r.report["omega_upper_limit"] = num(omega_upper_limit(phi, 1.0, 1e6, 1e6, 1e-9));
    }
    r.tables.push_back(std::move(om));
    AxiomSampling g;
    g.s_range = sc_.window;
    g.samples = 2000;
    g.seed = sc_.seed;
    g.tol = tol("axioms");
    const auto ax = check_axioms(phi, g);
    r.report["axioms"] = {{"identity", ax.identity},
                          {"cocycle", ax.cocycle},
                          {"inequality", ax.inequality},
                          {"monotone_in_t", ax.monotone_in_t},
                          {"monotone_in_s", ax.monotone_in_s},
                          {"samples", ax.samples}};
    r.passed = true;
    residual(r, "axioms", ax.worst());
  }

  void recover(PipelineResult& r) {
    const auto& phi = *sc_.flow;
    const auto hat = recover_mu(phi, sc_.window);
    const auto nodes = uniform_nodes(sc_.window, 401);
    Table t{"mu", {"s", "mu_hat"}, {}};
    r.passed = true;
    if (phi.is_generated()) {
      t.header.push_back("mu");
      double worst = 0.0;
      for (double s : nodes) {
        const double a = hat(s), b = (*sc_.mu)(s);
        t.rows.push_back({s, a, b});
        worst = std::max(worst, std::abs(a - b));
      }
      r.report["comparison"] = "recovered rate against the declared rate at the nodes";
      residual(r, "recover", worst);
    } else {
      for (double s : nodes) t.rows.push_back({s, hat(s)});
      const auto regen = RealSemiflow::generated(hat);
      std::mt19937_64 rng(sc_.seed);
      std::uniform_real_distribution<double> us(sc_.window.lo, sc_.window.hi), ut(0.0, 1.0);
      double worst = 0.0;
      std::size_t used = 0;
      for (int k = 0; k < 2000; ++k) {
        const double s = us(rng), tt = ut(rng);
        const double ref = phi(tt, s);
        if (!sc_.window.contains(ref)) continue;
        ++used;
        worst = std::max(worst, std::abs(regen(tt, s) - ref) / std::max(1.0, std::abs(ref)));
      }
      r.report["comparison"] = "semiflow regenerated from the recovered rate on random (t, s)";
      r.report["samples"] = used;
      residual(r, "recover", worst);
    }
    r.tables.push_back(std::move(t));
  }

  void check_family(PipelineResult& r) {
    const auto triples = random_triples(sc_.window, sc_.pairs, sc_.seed);
    const auto rep = check_cocycle(*sc_.family, triples);
    r.report["family"] = sc_.family_label;
    r.report["dimension"] = sc_.family->dim();
    r.report["triples"] = rep.triples;
    r.report["worst_triple"] = {rep.worst.t, rep.worst.tau, rep.worst.t0};
    r.report["continuity_modulus"] = num(continuity_modulus(*sc_.family, sc_.window, 41, 1e-4));
    r.passed = true;
    residual(r, "cocycle", rep.max_residual);
  }

  void fit_bound(PipelineResult& r) {
    const auto res = fit_growth_bound(*sc_.family, *sc_.mu, pairs());
    r.report["growth_rate"] = sc_.mu_label;
    r.report["pairs"] = sc_.pairs;
    json nested = json::array();
    for (double a : res.nested_alphas) nested.push_back(num(a));
    r.report["nested_alphas"] = nested;
    r.tables.push_back(detail::cloud_table("cloud", res.cloud));
    r.tables.push_back(detail::cloud_table("envelope", res.envelope));
    if (res.ok) {
      r.report["K"] = res.bound.K;
      r.report["alpha"] = res.bound.alpha;
      r.report["max_violation"] = res.bound.max_violation;
      r.passed = true;
      r.summary = "K " + sci(res.bound.K) + ", alpha " + sci(res.bound.alpha);
    } else {
      r.report["violation"] = res.violation;
      r.summary = "no finite growth bound: " + res.violation;
    }
  }

  GridFunction probe_function() const {
    if (sc_.probe) return sc_.functions.at(*sc_.probe);
    const Interval w = sc_.window;
    const double lo = w.lo + 0.25 * w.width(), hi = w.hi - 0.25 * w.width();
    const auto n = static_cast<Eigen::Index>(sc_.dim());
    return GridFunction::sample(uniform_nodes(w, 2001), [&](double x) {
      return Vector(Vector::Ones(n) * detail::bump(x, lo, hi));
    });
  }

  SemigroupContext context() const {
    ContextOptions opt;
    opt.window = sc_.window;
    opt.bound_pairs = sc_.pairs;
    opt.seed = sc_.seed;
    return SemigroupContext::build(*sc_.family, *sc_.flow, opt);
  }

  void check_semigroup(PipelineResult& r) {
    const auto ctx = context();
    const auto u = probe_function();
    r.report["probe"] = sc_.probe ? *sc_.probe : "bump on the middle half of the window";
    r.report["context"] = {{"non_degenerate", ctx.non_degenerate()}};
    if (ctx.bound()) r.report["context"]["growth_bound"] = {{"K", ctx.bound()->K}, {"alpha", ctx.bound()->alpha}};
    const double law = check_semigroup_law(ctx, 0.3, 0.45, u);
    const std::vector<double> times{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    const auto sc = check_strong_continuity(ctx, u, times, tol("continuity"));
    Table cont{"continuity", {"t", "residual"}, {}};
    for (std::size_t i = 0; i < times.size(); ++i) cont.rows.push_back({times[i], sc.residuals[i]});
    const auto sweep = generator_sweep(ctx, u);
    Table sw{"generator_sweep", {"h", "probe_sup_norm", "extrapolation_increment"}, {}};
    for (std::size_t k = 0; k < sweep.hs.size(); ++k) {
      const double inc = k >= 1 && k - 1 < sweep.increments.size() ? sweep.increments[k - 1] : std::nan("");
      sw.rows.push_back({sweep.hs[k], sweep.probes[k].sup_norm(), inc});
    }
    json incs = json::array();
    for (double x : sweep.increments) incs.push_back(num(x));
    r.report["generator"] = {{"hs", sweep.hs}, {"richardson_increments", incs}};
    r.tables.push_back(std::move(cont));
    r.tables.push_back(std::move(sw));
    r.tables.push_back(detail::grid_table("generator", "s", "Au", sweep.best()));
    r.passed = true;
    residual(r, "semigroup", law);
    residual(r, "continuity", sc.residuals.back());
  }

  void check_sim(PipelineResult& r) {
    const auto ctx = context();
    const GrowthRate* mu = ctx.growth_rate();
    if (!mu) throw Error(ErrorKind::Undefined, "check-similarity needs a generated semiflow");
    const double step = 0.05;
    const auto k_lo = static_cast<long>(std::ceil((*mu)(sc_.window.lo) / step));
    const auto k_hi = static_cast<long>(std::floor((*mu)(sc_.window.hi) / step));
    std::vector<double> nodes;
    for (long k = k_lo; k <= k_hi; ++k) nodes.push_back(mu->invert(step * static_cast<double>(k)));
    std::mt19937_64 rng(sc_.seed);
    std::uniform_real_distribution<double> ua(-1.0, 1.0);
    const auto n = static_cast<Eigen::Index>(sc_.dim());
    double worst = 0.0;
    Table t{"similarity", {"trial", "t", "residual"}, {}};
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Vector> vals;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        Vector v = Vector::Zero(n);
        if (i > 0 && i + 1 < nodes.size()) {
          for (Eigen::Index k = 0; k < n; ++k) v(k) = ua(rng);
        }
        vals.push_back(v);
      }
      const GridFunction u(nodes, vals);
      for (double tt : {0.1, 1.0, 3.0}) {
        const double res = check_similarity(ctx, tt, u);
        t.rows.push_back({double(trial), tt, res});
        worst = std::max(worst, res);
      }
    }
    r.report["nodes"] = {{"count", nodes.size()}, {"mu_spacing", step}};
    r.tables.push_back(std::move(t));
    r.passed = true;
    residual(r, "similarity", worst);
  }

  const ProjectionField& projection(PipelineResult& r) {
    if (!projection_) {
      if (sc_.projection) {
        projection_ = sc_.projection;
      } else {
        const auto cand = infer_projection_heuristic(*sc_.family, *sc_.mu, sc_.window, *sc_.infer);
        json ex = json::array();
        for (double x : cand.exponents) ex.push_back(x);
        inferred_ = json{{"exponents", ex}, {"separation", cand.separation}, {"confidence", cand.confidence},
                         {"heuristic", cand.heuristic}};
        projection_ = cand.field;
      }
    }
    r.report["projection"] = sc_.projection_label;
    if (!inferred_.is_null()) r.report["inference"] = inferred_;
    return *projection_;
  }

  const DichotomyCertificate& certificate(PipelineResult& r) {
    if (!cert_) {
      const auto& P = projection(r);
      const auto res = certify_dichotomy(*sc_.family, *sc_.mu, P, pairs());
      if (!res.ok) throw Error(ErrorKind::PipelineFailure, "certify-dichotomy: " + res.violation);
      cert_ = *res.certificate;
    }
    return *cert_;
  }

  void certify(PipelineResult& r) {
    const auto& P = projection(r);
    const auto ps = pairs();
    const auto comp = check_compatibility(*sc_.family, P, ps);
    r.report["compatibility"] = {{"max_commutation", comp.max_commutation},
                                 {"min_restricted_singular", num(comp.min_restricted_singular)},
                                 {"floor", comp.floor},
                                 {"rank", comp.rank}};
    auto res = certify_dichotomy(*sc_.family, *sc_.mu, P, ps);
    r.report["pairs"] = ps.size();
    r.passed = true;
    if (res.ok) {
      const auto& c = *res.certificate;
      r.report["certificate"] = {{"N", c.N}, {"nu", c.nu}, {"growth_rate", sc_.mu_label},
                                 {"slack_P", c.slack_P}, {"slack_Q", c.slack_Q}};
      r.tables.push_back(detail::cloud_table("cloud_P", c.cloud_P));
      r.tables.push_back(detail::cloud_table("cloud_Q", c.cloud_Q));
      r.summary = "N " + sci(c.N) + ", nu " + sci(c.nu);
      cert_ = c;
    } else {
      json v = json::array();
      for (const auto& x : res.violations) {
        v.push_back({{"later", x.pair.later}, {"earlier", x.pair.earlier}, {"d", x.d}, {"L", x.L},
                     {"which", std::string(1, x.which)}});
      }
      r.report["violation"] = res.violation;
      r.report["violations"] = v;
      r.report["fitted"] = {{"N", res.N}, {"nu", res.nu}};
      r.passed = false;
      r.summary = "no dichotomy: " + res.violation;
    }
    residual(r, "compatibility", comp.max_commutation);
    if (!comp.invertible()) {
      r.passed = false;
      r.summary += "; U(t,s) not invertible on ker P";
    }
  }

  const GridFunction& solution(PipelineResult& r) {
    if (!solution_) {
      const auto& cert = certificate(r);
      const auto& f = sc_.functions.at(*sc_.forcing);
      solution_ = solve_green(*sc_.family, *sc_.mu, cert, f, uniform_nodes(sc_.window, sc_.output_nodes));
    }
    return *solution_;
  }

  void solve(PipelineResult& r) {
    const auto& u = solution(r);
    r.report["forcing"] = *sc_.forcing;
    r.report["convention"] = "u(t) = -integral mu'(xi) Gamma(t, xi) f(xi) dxi, so that G u = f";
    r.report["output_nodes"] = u.size();
    r.report["sup_norm"] = num(u.sup_norm());
    bool finite = true;
    for (const auto& v : u.values()) finite &= v.allFinite();
    r.tables.push_back(detail::grid_table("solution", "t", "u", u));
    r.passed = finite;
    r.summary = finite ? "sup |u| " + sci(u.sup_norm()) : "non-finite solution values";
  }

  void verify(PipelineResult& r) {
    const auto& u = solution(r);
    const auto& f = sc_.functions.at(*sc_.forcing);
    std::mt19937_64 rng(sc_.seed);
    std::uniform_int_distribution<std::size_t> pick(0, u.size() - 1);
    std::vector<TimePair> ps;
    for (int k = 0; k < 50; ++k) {
      double a = u.nodes()[pick(rng)], b = u.nodes()[pick(rng)];
      if (a < b) std::swap(a, b);
      ps.push_back({a, b});
    }
    const auto w = u.map_values([](double, const Vector& v) { return Vector(-v); });
    const auto rep = verify_integral_equation(*sc_.family, *sc_.mu, w, f, ps);
    const auto lit = verify_integral_equation(*sc_.family, *sc_.mu, u, f, ps);
    r.report["forcing"] = *sc_.forcing;
    r.report["convention"] =
        "checked for w = -u, which solves G w = -f; the identity w(t) = U(t,s)w(s) + integral mu'U f holds "
        "for that sign";
    r.report["same_identity_with_u"] = num(lit.max_residual);
    r.report["pairs"] = ps.size();
    r.report["skipped"] = rep.skipped;
    r.report["worst_pair"] = {rep.worst.later, rep.worst.earlier};
    Table t{"residuals", {"later", "earlier", "residual"}, {}};
    for (std::size_t i = 0; i < ps.size() && i < rep.residuals.size(); ++i) {
      t.rows.push_back({ps[i].later, ps[i].earlier, rep.residuals[i]});
    }
    r.tables.push_back(std::move(t));
    r.passed = true;
    residual(r, "integral", rep.max_residual);
  }

  const Scenario& sc_;
  std::optional<ProjectionField> projection_;
  json inferred_;
  std::optional<DichotomyCertificate> cert_;
  std::optional<GridFunction> solution_;
};

inline std::string timestamp_line() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::strftime(buf, sizeof buf, "# generated %Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_table(const std::filesystem::path& file, const Table& t) {
  std::ofstream out(file);
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
}

/// Runs the scenario's pipelines in the fixed order and writes
/// <scenario>.<pipeline>.report plus one CSV per table into the output directory.
inline RunOutcome run_scenario(const Scenario& sc, const RunOptions& opt = {}) {
  RunOutcome outcome;
  Runner runner(sc);
  if (opt.write_files) std::filesystem::create_directories(opt.out_dir);
  for (const auto& name : sc.pipelines) {
    auto res = runner.run(name);
    if (opt.write_files) {
      std::ofstream out(opt.out_dir / (sc.name + "." + name + ".report"));
      out << timestamp_line() << "\n" << res.report.dump(2) << "\n";
      for (const auto& t : res.tables) write_table(opt.out_dir / runner.table_file(name, t), t);
    }
    outcome.results.push_back(std::move(res));
  }
  return outcome;
}

}  // namespace evosemi::cli
