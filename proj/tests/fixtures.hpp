#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "evosemi/evolution_family.hpp"
#include "evosemi/growth_rate.hpp"
#include "evosemi/semiflow.hpp"

namespace fixtures {

using evosemi::EvolutionFamily;
using evosemi::GrowthRate;
using evosemi::Matrix;
using evosemi::RealSemiflow;
using evosemi::Vector;

inline Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

inline Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

/// U(t,s) = diag(e^{μ(s)−μ(t)}, e^{μ(t)−μ(s)}).
inline EvolutionFamily diagonal_family(const GrowthRate& mu) {
  return EvolutionFamily::closed_form(
      2,
      [mu](double t, double s) {
        const double d = mu(t) - mu(s);
        return diag2(std::exp(-d), std::exp(d));
      },
      "diagonal(" + mu.name() + ")");
}

/// U(t,s) = e^{μ(s)−μ(t)} P + e^{μ(t)−μ(s)} (Id − P) for a constant projection P.
inline EvolutionFamily split_family(const GrowthRate& mu, const Matrix& P) {
  const Matrix Q = Matrix::Identity(P.rows(), P.cols()) - P;
  return EvolutionFamily::closed_form(
      static_cast<std::size_t>(P.rows()),
      [mu, P, Q](double t, double s) {
        const double d = mu(t) - mu(s);
        return Matrix(std::exp(-d) * P + std::exp(d) * Q);
      },
      "split(" + mu.name() + ")");
}

inline Matrix oblique_projection() {
  Matrix P(2, 2);
  P << 1.0, 2.0, 0.0, 0.0;
  return P;
}

inline Matrix rotation(double theta) {
  Matrix R(2, 2);
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return R;
}

/// φ_t(s) = s e^t for s < 0, s for s >= 0.
inline RealSemiflow plateau_flow() {
  return RealSemiflow::closed_form(
      [](double t, double s) { return s < 0.0 ? s * std::exp(t) : s; }, "plateau");
}

/// Degenerate flow with bounded ω: s e^t for s < 0, 0 fixed, and for s > 0
/// the flow generated by ε ln(s/(1+s)), which drives every s > 0 to 0.
inline RealSemiflow collapsing_flow(double eps) {
  return RealSemiflow::closed_form(
      [eps](double t, double s) {
        if (s < 0.0) return s * std::exp(t);
        if (s == 0.0) return 0.0;
        const double lq = -std::log1p(1.0 / s) - t / eps;
        return std::exp(lq) / -std::expm1(lq);
      },
      "collapsing");
}

inline double hat(double x, double lo, double hi) {
  const double c = 0.5 * (lo + hi), w = 0.5 * (hi - lo);
  return std::max(0.0, 1.0 - std::abs(x - c) / w);
}

/// C^∞ bump supported on (lo, hi) with peak 1.
inline double bump(double x, double lo, double hi) {
  if (x <= lo || x >= hi) return 0.0;
  const double y = (2 * x - lo - hi) / (hi - lo);
  return std::exp(1.0 - 1.0 / (1.0 - y * y));
}

/// Composite Simpson with `panels` panels on each piece between breaks.
inline double simpson(const std::function<double(double)>& f, std::vector<double> breaks, int panels) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k], b = breaks[k + 1];
    if (!(b > a)) continue;
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int i = 0; i < panels; ++i) {
      const double x0 = a + i * h;
      acc += f(x0) + 4 * f(x0 + h / 2) + f(x0 + h);
    }
    total += acc * h / 6;
  }
  return total;
}

}  // namespace fixtures
