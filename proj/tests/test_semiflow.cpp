#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evosemi/semiflow.hpp"

using namespace evosemi;

namespace {

RealSemiflow plateau_flow() {
  return RealSemiflow::closed_form(
      [](double t, double s) { return s < 0.0 ? s * std::exp(t) : s; }, "plateau");
}

}  // namespace

TEST(Apply, Translation) { EXPECT_DOUBLE_EQ(apply(RealSemiflow::translation(), 3.0, 5.0), 2.0); }

TEST(Apply, TimeZeroIsIdentity) {
  EXPECT_DOUBLE_EQ(apply(RealSemiflow::generated(growth::polynomial_log()), 0.0, 1.7), 1.7);
  EXPECT_DOUBLE_EQ(apply(plateau_flow(), 0.0, 1.7), 1.7);
}

TEST(Apply, PolynomialLog) {
  EXPECT_NEAR(apply(RealSemiflow::generated(growth::polynomial_log()), std::log(2.0), 1.0), 0.0,
              1e-15);
}

TEST(Apply, Errors) {
  const auto phi = RealSemiflow::translation().with_domain({-1.0, 1.0}, 0.5);
  EXPECT_NO_THROW(phi(1.0, 1.4));
  try {
    phi(1.0, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainExceeded);
  }
  EXPECT_THROW(phi(-1.0, 0.0), Error);
}

TEST(Omega, PlateauExample) {
  EXPECT_TRUE(omega(plateau_flow(), -1.0, 1e6, 1e-9).value.is_minus_infinity());
  const auto w2 = omega(plateau_flow(), 2.0, 1e6, 1e-9);
  ASSERT_TRUE(w2.value.is_finite());
  EXPECT_NEAR(w2.value.value(), 2.0, 1e-12);
}

TEST(Omega, TranslationAndNegExp) {
  EXPECT_TRUE(omega(RealSemiflow::translation(), 0.0, 1e8, 1e-9).value.is_minus_infinity());
  const auto phi = RealSemiflow::generated(growth::neg_exp());
  EXPECT_NEAR(phi(3.0, 0.0), -std::log(4.0), 1e-14);
  EXPECT_TRUE(omega(phi, 0.0, 1e8, 1e-9).value.is_minus_infinity());
}

TEST(Omega, InconclusiveOnShortHorizon) {
  // only t = 1, 2 are sampled: too few increments to decide
  const auto phi = RealSemiflow::closed_form(
      [](double t, double s) { return s - t / (1.0 + t); }, "saturating");
  try {
    omega(phi, 0.0, 2.0, 1e-12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Inconclusive);
  }
}

TEST(Omega, Identities) {
  const auto phi = plateau_flow();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> us(0.0, 10.0), ut(0.0, 20.0);
  for (int i = 0; i < 50; ++i) {
    const double s = us(rng), t = ut(rng);
    const double w = omega(phi, s, 1e6, 1e-9).value.value();
    EXPECT_NEAR(omega(phi, phi(t, s), 1e6, 1e-9).value.value(), w, 1e-9);
    EXPECT_NEAR(phi(t, w), w, 1e-9);
    EXPECT_NEAR(omega(phi, w, 1e6, 1e-9).value.value(), w, 1e-9);
    EXPECT_LE(w, phi(t, s) + 1e-12);
    EXPECT_LE(phi(t, s), s + 1e-12);
  }
}

TEST(Omega, UpperLimitOfPlateau) {
  EXPECT_TRUE(omega_upper_limit(plateau_flow(), 1.0, 1e6, 1e6, 1e-9).is_plus_infinity());
}

TEST(Axioms, GeneratedFlowsPass) {
  for (const auto& mu : {growth::identity(), growth::polynomial_log(), growth::odd_power(1)}) {
    AxiomSampling g;
    g.s_range = {-10.0, 10.0};
    const auto rep = check_axioms(RealSemiflow::generated(mu), g);
    EXPECT_TRUE(rep.passes()) << mu.name() << " worst " << rep.worst();
  }
}

TEST(Axioms, NonSemiflowsFail) {
  const auto quad = check_axioms(
      RealSemiflow::closed_form([](double t, double s) { return s - t * t; }, "s-t^2"));
  EXPECT_GT(quad.cocycle, quad.tol);
  EXPECT_FALSE(quad.passes());
  const auto up = check_axioms(
      RealSemiflow::closed_form([](double t, double s) { return s + t; }, "s+t"));
  EXPECT_GT(up.inequality, 0.0);
  EXPECT_FALSE(up.passes());
}

TEST(Classify, Cases) {
  std::vector<double> grid;
  for (int i = -10; i <= 10; ++i) grid.push_back(0.5 * i);
  EXPECT_TRUE(classify(RealSemiflow::generated(growth::polynomial_log()), grid, 1e8).non_degenerate);
  EXPECT_TRUE(classify(RealSemiflow::translation(), grid, 1e8).non_degenerate);
  const auto deg = classify(plateau_flow(), grid, 1e6);
  EXPECT_FALSE(deg.non_degenerate);
  std::vector<double> expected;
  for (double s : grid) {
    if (s >= 0.0) expected.push_back(s);
  }
  EXPECT_EQ(deg.fixed_points, expected);
}

TEST(HittingTime, AdditivityOnGeneratedFlow) {
  const auto phi = RealSemiflow::generated(growth::polynomial_log());
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    double a = u(rng), b = u(rng), c = u(rng);
    if (a < b) std::swap(a, b);
    if (b < c) std::swap(b, c);
    if (a < b) std::swap(a, b);
    EXPECT_NEAR(hitting_time(phi, a, b) + hitting_time(phi, b, c), hitting_time(phi, a, c), 1e-8);
  }
}

TEST(HittingTime, Unbounded) {
  try {
    hitting_time(plateau_flow(), 2.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::HittingTimeUnbounded);
  }
}

TEST(RecoverMu, Translation) {
  const auto hat = recover_mu(RealSemiflow::translation(), {-10.0, 10.0});
  for (int i = 0; i <= 2000; ++i) {
    const double s = -10.0 + 0.01 * i;
    EXPECT_NEAR(hat(s), s, 1e-8);
  }
}

TEST(RecoverMu, CubicAndPolylogAtNodes) {
  struct Case {
    GrowthRate mu;
    Interval w;
  };
  for (const auto& c : {Case{growth::odd_power(1), {-3.0, 3.0}},
                        Case{growth::polynomial_log(), {-10.0, 10.0}}}) {
    const auto hat = recover_mu(RealSemiflow::generated(c.mu), c.w);
    double err = 0.0;
    for (int i = 0; i < 401; ++i) {
      const double s = c.w.lo + c.w.width() * i / 400.0;
      err = std::max(err, std::abs(hat(s) - c.mu(s)));
    }
    EXPECT_LE(err, 1e-6) << c.mu.name();
  }
}

TEST(RecoverMu, RoundTripRegeneration) {
  const auto mu = growth::polynomial_log();
  const auto phi = RealSemiflow::generated(mu);
  const auto hat = recover_mu(phi, {-10.0, 10.0});
  const auto phi_hat = RealSemiflow::generated(hat);
  double worst = 0.0;
  for (int i = 0; i <= 400; i += 7) {
    for (int j = 0; j <= i; j += 5) {
      const double s = -10.0 + 0.05 * i, target = -10.0 + 0.05 * j;
      const double t = hitting_time(phi, s, target);
      worst = std::max(worst, std::abs(phi_hat(t, s) - phi(t, s)));
    }
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(RecoverMu, RefusesDegenerateFlow) {
  try {
    recover_mu(plateau_flow(), {-2.0, 2.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotNonDegenerate);
  }
}

TEST(StrictProperties, NonDegenerateFlow) {
  const auto phi = RealSemiflow::generated(growth::polynomial_log());
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> us(-10.0, 10.0), ut(1e-3, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double s = us(rng), t = ut(rng), d = ut(rng);
    EXPECT_LT(phi(t, s), s);
    EXPECT_LT(phi(t + d, s), phi(t, s));
    EXPECT_LT(phi(t, s), phi(t, s + d));
  }
}
