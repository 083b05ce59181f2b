#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "evosemi/evosemi.hpp"
#include "fixtures.hpp"

using namespace evosemi;
using namespace fixtures;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

EvolutionFamily identity_family(Eigen::Index n) {
  return EvolutionFamily::closed_form(static_cast<std::size_t>(n),
                                      [n](double, double) { return Matrix(Matrix::Identity(n, n)); }, "Id");
}

GridFunction bump2(Interval w, double h, Interval support) {
  const auto n = static_cast<std::size_t>(std::lround(w.width() / h)) + 1;
  return GridFunction::sample(uniform_nodes(w, n), [&](double x) {
    const double b = bump(x, support.lo, support.hi);
    return vec2(b, -0.5 * b);
  });
}

GridFunction negate(const GridFunction& g) {
  return g.map_values([](double, const Vector& v) { return Vector(-v); });
}

Outcome c1_roundtrip() {
  double worst = 0.0, between = 0.0;
  for (const auto& mu : {growth::identity(), growth::polynomial_log(), growth::odd_power(1)}) {
    const auto hat_mu = recover_mu(RealSemiflow::generated(mu), {-10.0, 10.0});
    for (int i = 0; i <= 400; ++i) {
      const double s = -10.0 + 0.05 * i;
      worst = std::max(worst, std::abs(hat_mu(s) - mu(s)));
    }
    for (int i = 0; i < 4000; ++i) {
      const double s = -10.0 + 0.005 * (i + 0.5);
      between = std::max(between, std::abs(hat_mu(s) - mu(s)));
    }
  }
  return {worst <= 1e-6, "sup|mu_hat - mu| at the 401 nodes = " + fmt("%.2e", worst) +
                             " (between nodes, monotone-cubic interpolation: " + fmt("%.2e", between) + ")"};
}

Outcome c2_degenerate() {
  const auto phi = plateau_flow();
  std::vector<double> grid;
  for (int i = -10; i <= 10; ++i) grid.push_back(0.5 * i);
  const auto cls = classify(phi, grid, 1e6);
  const auto w_neg = omega(phi, -1.0, 1e6, 1e-9).value;
  const auto w_two = omega(phi, 2.0, 1e6, 1e-9).value;
  const auto lim = omega_upper_limit(phi, 1.0, 1e6, 1e6, 1e-9);
  const bool ok = !cls.non_degenerate && w_neg.is_minus_infinity() && w_two.is_finite() &&
                  std::abs(w_two.value() - 2.0) <= 1e-6 && lim.is_plus_infinity();
  return {ok, std::string(cls.non_degenerate ? "NonDegenerate" : "Degenerate") + " with " +
                  std::to_string(cls.fixed_points.size()) + " fixed grid points, omega(-1) = " + w_neg.str() +
                  ", omega(2) = " + w_two.str() + ", lim omega = " + lim.str()};
}

Outcome c3_axioms() {
  double worst = 0.0;
  for (const auto& mu : {growth::identity(), growth::polynomial_log(), growth::odd_power(1)}) {
    AxiomSampling g;
    g.samples = 10000;
    worst = std::max(worst, check_axioms(RealSemiflow::generated(mu), g).worst());
  }
  return {worst <= 1e-8, "worst axiom residual over 3 x 10^4 samples = " + fmt("%.2e", worst)};
}

Outcome c4_growth_bound() {
  const auto mu = growth::polynomial_log();
  const auto U = EvolutionFamily::closed_form(1, [](double t, double s) {
    return Matrix::Constant(1, 1, (1 + std::abs(s)) / (1 + std::abs(t)));
  });
  const auto ex = fit_growth_bound(U, mu, random_pairs({-10.0, 10.0}, 1000, 41));
  const auto cubic = EvolutionFamily::closed_form(2, [](double t, double s) {
    const double d = t * t * t - s * s * s;
    return diag2(std::exp(-d), std::exp(d));
  });
  std::vector<TimePair> pairs;
  for (int i = 0; i <= 40; ++i) {
    for (int j = 0; j <= i; ++j) pairs.push_back({-5.0 + 0.25 * i, -5.0 + 0.25 * j});
  }
  const auto lin = fit_growth_bound(cubic, growth::identity(), pairs);
  const auto cub = fit_growth_bound(cubic, growth::odd_power(1), pairs);
  const bool ok = ex.ok && ex.bound.alpha <= 1 + 1e-6 && ex.bound.K <= 1 + 1e-6 && !lin.ok && cub.ok &&
                  std::abs(cub.bound.alpha - 1) <= 1e-6 && std::abs(cub.bound.K - 1) <= 1e-6;
  return {ok, "example family alpha = " + fmt("%.9f", ex.bound.alpha) + ", K = " + fmt("%.9f", ex.bound.K) +
                  "; cubic family under mu = s: " + (lin.ok ? "fitted" : "violation report") +
                  "; under mu = s^3: alpha = " + fmt("%.9f", cub.bound.alpha) + ", K = " + fmt("%.9f", cub.bound.K)};
}

Outcome c5_similarity() {
  const auto mu = growth::polynomial_log();
  const auto ctx = SemigroupContext::build(diagonal_family(mu), RealSemiflow::generated(mu));
  std::vector<double> nodes;
  for (int k = -80; k <= 80; ++k) nodes.push_back(mu.invert(0.05 * k));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ua(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector> vals;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      vals.push_back(i == 0 || i + 1 == nodes.size() ? vec2(0, 0) : vec2(ua(rng), ua(rng)));
    }
    const GridFunction u(nodes, vals);
    for (double t : {0.1, 1.0, 3.0}) worst = std::max(worst, check_similarity(ctx, t, u));
  }
  return {worst <= 1e-12, "max node residual |T_t u - F^-1 S_t F u| = " + fmt("%.2e", worst)};
}

Outcome c6_semigroup_law() {
  const auto mu = growth::polynomial_log();
  const auto ctx = SemigroupContext::build(diagonal_family(mu), RealSemiflow::generated(mu));
  const std::vector<double> hs{1e-1, 5e-2, 1e-2};
  std::vector<double> res;
  for (double h : hs) res.push_back(check_semigroup_law(ctx, 0.3, 0.45, bump2({-6, 6}, h, {-5, 5})));
  const double order = std::log(res.front() / res.back()) / std::log(hs.front() / hs.back());
  return {order >= 1.8, "residuals " + fmt("%.2e", res[0]) + ", " + fmt("%.2e", res[1]) + ", " +
                            fmt("%.2e", res[2]) + "; observed order " + fmt("%.3f", order)};
}

Outcome c7_strong_continuity() {
  const std::vector<double> ts{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  const Vector xi = vec2(1.0, -2.0);
  const auto u = GridFunction::sample(uniform_nodes({-2, 2}, 401),
                                      [&](double x) { return Vector(hat(x, -1.0, 1.0) * xi); });
  const auto bad = check_strong_continuity(SemigroupContext::unchecked(identity_family(2), collapsing_flow(1e-8)), u, ts);
  double dev = 0.0;
  for (double r : bad.residuals) dev = std::max(dev, std::abs(r - xi.norm()));
  const auto mu = growth::polynomial_log();
  std::vector<SemigroupContext> valid{
      SemigroupContext::build(diagonal_family(mu), RealSemiflow::generated(mu)),
      SemigroupContext::build(identity_family(2), RealSemiflow::translation()),
      SemigroupContext::build(identity_family(2), plateau_flow())};
  bool decays = true;
  double last = 0.0;
  for (const auto& ctx : valid) {
    const auto rep = check_strong_continuity(ctx, u, ts);
    for (std::size_t i = 1; i < ts.size(); ++i) decays &= rep.residuals[i] < rep.residuals[i - 1];
    decays &= rep.passes;
    last = std::max(last, rep.residuals.back());
  }
  return {dev <= 1e-3 && decays, "collapsing flow: max ||T_t u - u|| - ||xi||| = " + fmt("%.2e", dev) +
                                     " with ||xi|| = " + fmt("%.6f", xi.norm()) +
                                     "; valid contexts decrease to " + fmt("%.2e", last)};
}

Outcome c8_certificate() {
  const auto mu = growth::polynomial_log();
  const Matrix P = oblique_projection();
  auto pairs = random_pairs({-8, 8}, 1000, 81);
  for (int k = -8; k <= 8; ++k) pairs.push_back({double(k), double(k)});
  const auto res = certify_dichotomy(split_family(mu, P), mu, ProjectionField::constant(P), pairs);
  const double target = std::max(op_norm(P), op_norm(Matrix::Identity(2, 2) - P));
  const bool ok = res.ok && res.nu >= 1 - 1e-6 && res.nu <= 1 + 1e-12 && std::abs(res.N - target) <= 1e-6;
  return {ok, "nu = " + fmt("%.12f", res.nu) + ", N = " + fmt("%.9f", res.N) + " (max(|P|,|Q|) = " +
                  fmt("%.9f", target) + ")"};
}

struct GreenSetup {
  GrowthRate mu = growth::polynomial_log();
  EvolutionFamily U = diagonal_family(mu);
  DichotomyCertificate cert =
      *certify_dichotomy(U, mu, ProjectionField::constant(diag2(1, 0)), random_pairs({-8, 8}, 300, 91)).certificate;
  Vector xi = vec2(1.0, -0.5);
  GridFunction f = GridFunction::sample(uniform_nodes({0, 1}, 21), [this](double x) {
    return Vector(hat(x, 0.0, 1.0) * xi);
  });
};

double oracle_component(const GrowthRate& mu, double t, int c) {
  if (c == 0) {
    if (t <= 0.0) return 0.0;
    const double b = std::min(1.0, t);
    auto g = [&](double x) { return mu.derivative(x) * std::exp(mu(x) - mu(t)) * hat(x, 0.0, 1.0); };
    return -simpson(g, b > 0.5 ? std::vector<double>{0.0, 0.5, b} : std::vector<double>{0.0, b}, 200);
  }
  if (t >= 1.0) return 0.0;
  const double a = std::max(0.0, t);
  auto g = [&](double x) { return mu.derivative(x) * std::exp(mu(t) - mu(x)) * hat(x, 0.0, 1.0); };
  return simpson(g, a < 0.5 ? std::vector<double>{a, 0.5, 1.0} : std::vector<double>{a, 1.0}, 200);
}

Outcome c9_green() {
  GreenSetup g;
  const auto out = uniform_nodes({-5, 5}, 201);
  const auto u = solve_green(g.U, g.mu, g.cert, g.f, out);
  double err = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vector o = vec2(g.xi(0) * oracle_component(g.mu, out[i], 0), g.xi(1) * oracle_component(g.mu, out[i], 1));
    err = std::max(err, (u.values()[i] - o).norm());
  }
  std::mt19937_64 rng(92);
  std::uniform_int_distribution<std::size_t> pick(0, out.size() - 1);
  std::vector<TimePair> pairs;
  for (int k = 0; k < 50; ++k) {
    double a = out[pick(rng)], b = out[pick(rng)];
    if (a < b) std::swap(a, b);
    pairs.push_back({a, b});
  }
  const auto rep = verify_integral_equation(g.U, g.mu, negate(u), g.f, pairs);
  const auto literal = verify_integral_equation(g.U, g.mu, u, g.f, pairs);
  const bool ok = err <= 1e-6 && rep.max_residual <= 1e-6;
  return {ok, "sup |u - oracle| over 201 nodes = " + fmt("%.2e", err) +
                  "; integral-equation residual for w = G^-1(-f) on 50 pairs = " + fmt("%.2e", rep.max_residual) +
                  " (same identity with u = G^-1 f: " + fmt("%.2e", literal.max_residual) + ")"};
}

Outcome c10_generator() {
  GreenSetup g;
  const Interval span{-2.0, 3.0};
  const auto nodes = uniform_nodes(span, 10001);
  const auto w = negate(solve_green(g.U, g.mu, g.cert, g.f, nodes));  // Gw = −f
  const auto ctx = SemigroupContext::build(g.U, RealSemiflow::generated(g.mu));
  const auto sweep = generator_sweep(ctx, w, {1e-2, 1e-3, 1e-4, 1e-5});
  const auto& R = sweep.best();
  double err_f = 0.0, err_formula = 0.0;
  const double margin = 0.05;
  for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
    const double s = nodes[i];
    if (s < span.lo + margin) continue;
    const Vector minus_f = -g.f(s);
    err_f = std::max(err_f, (R.values()[i] - minus_f).norm());
    const double mp = g.mu.derivative(s);
    const Vector dw = (w.values()[i + 1] - w.values()[i - 1]) / (nodes[i + 1] - nodes[i - 1]);
    const Vector Gw = vec2(-w.values()[i](0) - dw(0) / mp, w.values()[i](1) - dw(1) / mp);
    err_formula = std::max(err_formula, (R.values()[i] - Gw).norm());
  }
  return {err_f <= 1e-3 && err_formula <= 1e-3,
          "w = G^-1(-f): Richardson limit vs -f = " + fmt("%.2e", err_f) + ", vs explicit G formula = " +
              fmt("%.2e", err_formula) + " at interior nodes"};
}

Outcome c11_similar_certificates() {
  struct Case {
    std::string name;
    GrowthRate mu;
    EvolutionFamily U;
    Matrix P;
    Interval w;
  };
  const auto pl = growth::polynomial_log();
  const auto cube = growth::odd_power(1);
  std::vector<Case> battery{
      {"diagonal", pl, diagonal_family(pl), diag2(1, 0), {-8, 8}},
      {"oblique split", pl, split_family(pl, oblique_projection()), oblique_projection(), {-8, 8}},
      {"cubic", cube, diagonal_family(cube), diag2(1, 0), {-3, 3}},
  };
  double dN = 0.0, dnu = 0.0;
  bool all_ok = true;
  for (const auto& c : battery) {
    auto pairs = random_pairs(c.w, 500, 111);
    std::vector<TimePair> vpairs;
    for (const auto& p : pairs) vpairs.push_back({c.mu(p.later), c.mu(p.earlier)});
    const auto P = ProjectionField::constant(c.P);
    const auto a = certify_dichotomy(c.U, c.mu, P, pairs);
    const auto b = certify_dichotomy(rescaled_family(c.U, c.mu), growth::identity(), rescaled_projection(P, c.mu), vpairs);
    all_ok &= a.ok && b.ok;
    dN = std::max(dN, std::abs(a.N - b.N));
    dnu = std::max(dnu, std::abs(a.nu - b.nu));
  }
  return {all_ok && dN <= 1e-9 && dnu <= 1e-9,
          "max |dN| = " + fmt("%.2e", dN) + ", max |dnu| = " + fmt("%.2e", dnu) + " over 3 families"};
}

}  // namespace

int main() {
  report(1, "semiflow round-trip", c1_roundtrip);
  report(2, "degenerate classification", c2_degenerate);
  report(3, "semiflow axiom suite", c3_axioms);
  report(4, "growth-bound fit", c4_growth_bound);
  report(5, "similarity identity", c5_similarity);
  report(6, "semigroup law", c6_semigroup_law);
  report(7, "strong-continuity counterexample", c7_strong_continuity);
  report(8, "dichotomy certificate", c8_certificate);
  report(9, "Green solver vs oracle", c9_green);
  report(10, "generator cross-check", c10_generator);
  report(11, "similarity of certification", c11_similar_certificates);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
