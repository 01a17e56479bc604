#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "surrogate/asymptotics.hpp"
#include "surrogate/sampling.hpp"

using namespace surrogate;

namespace {

std::array<double, 6> as_array(const Vector6& p) { return {p[0], p[1], p[2], p[3], p[4], p[5]}; }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST(JointCovariance, DegenerateArmsGiveZero) {
  const auto cov = joint_covariance(JointProbs{}, JointProbs{}, 100, 100);
  EXPECT_TRUE(cov.sigma.isZero(0.0));
}

TEST(JointCovariance, ControlBlockAndScaling) {
  const JointProbs c = to_joint(kReferenceControl);
  const auto one = joint_covariance(c, c, 20000, 20000);
  EXPECT_NEAR(one.sigma(2, 2), 0.015 * 0.985, 1e-15);
  EXPECT_NEAR(one.sigma(0, 2), -0.001 * 0.015, 1e-15);
  EXPECT_TRUE((one.sigma.topRightCorner<3, 3>().isZero(0.0)));

  const auto two = joint_covariance(c, c, 20000, 10000);
  EXPECT_EQ(two.n_over_m, 2.0);
  EXPECT_TRUE((two.sigma.bottomRightCorner<3, 3>().isApprox(2.0 * one.sigma.bottomRightCorner<3, 3>(), 1e-15)));
  EXPECT_TRUE((two.sigma.topLeftCorner<3, 3>() == one.sigma.topLeftCorner<3, 3>()));
  EXPECT_TRUE(two.sigma.isApprox(two.sigma.transpose()));
}

TEST(Gradients, ReferenceControlHandValues) {
  const JointProbs c = to_joint(kReferenceControl);
  const auto g = endpoint_gradients(stack_cells(c, c));
  // Equal arms: the ratio is 1, so |r| = |s| = 1 / p_L and |t| = |u| = 1 / p_D.
  EXPECT_DOUBLE_EQ(g.s, -50.0);
  EXPECT_DOUBLE_EQ(g.u, -62.5);
  EXPECT_DOUBLE_EQ(g.r, 1.0 / 0.020);
  EXPECT_DOUBLE_EQ(g.t, 1.0 / 0.016);
  EXPECT_DOUBLE_EQ(g.r * g.t, 3125.0);
  EXPECT_DOUBLE_EQ(g.s * g.u, 3125.0);
}

// Central differences carry a truncation error of about h^2 |b| / a^4 on the
// derivative of b / a. Within that budget every point must agree.
TEST(Gradients, FiniteDifferencesWithinTruncationBudget) {
  Rng rng(77);
  const double h = 1e-6;
  for (int i = 0; i < 2000; ++i) {
    const TrialParams t = draw_trial(rng, i % 2 ? StageLethality::Ordered : StageLethality::Reversed);
    const Vector6 p = stack_cells(to_joint(t.control), to_joint(t.screen));
    const double late_c = p[1] + p[2], death_c = p[0] + p[2];
    if (death_c < 10 * h) continue;  // the stencil would cross zero
    const auto g = endpoint_gradients(p);
    const auto fd = oracle::fd_jacobian(as_array(p), h);
    const double budget_S = 2 * h * h * (p[4] + p[5]) / std::pow(late_c, 4) + 1e-8 / late_c;
    const double budget_M = 2 * h * h * (p[3] + p[5]) / std::pow(death_c, 4) + 1e-8 / death_c;
    for (int k = 0; k < 6; ++k) {
      ASSERT_NEAR(g.grad_S[k], fd[0][k], budget_S + 1e-12 * std::abs(g.grad_S[k])) << i << "," << k;
      ASSERT_NEAR(g.grad_M[k], fd[1][k], budget_M * 1.0 + 1e-12 * std::abs(g.grad_M[k])) << i << "," << k;
    }
  }
}

TEST(EndpointCovariance, ReferenceControlClosedForm) {
  const auto cov = endpoint_covariance(scenario_table()[0], 20000, 20000);
  // Equal arms: var = 2 (1 - p) / p for each ratio, cov = 2 A r t.
  EXPECT_NEAR(cov.var_S, 2 * 0.98 / 0.02, 1e-9);
  EXPECT_NEAR(cov.var_M, 2 * 0.984 / 0.016, 1e-9);
  EXPECT_NEAR(cov.cov_SM, 2 * 0.01468 * 50 * 62.5, 1e-9);
  ASSERT_TRUE(cov.rho.has_value());
  EXPECT_GT(*cov.rho, 0.0);
  EXPECT_NEAR(*cov.rho, 91.75 / std::sqrt(98.0 * 123.0), 1e-12);
}

TEST(EndpointCovariance, PositiveSemidefiniteOnRandomDraws) {
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    const auto t = draw_trial(rng, StageLethality::Ordered);
    const auto cov = endpoint_covariance(t, 1000, 1000 + 17 * i);
    ASSERT_GE(cov.var_S, 0);
    ASSERT_GE(cov.var_M, 0);
    ASSERT_LE(cov.cov_SM * cov.cov_SM, cov.var_S * cov.var_M * (1 + 1e-12));
  }
}

TEST(EndpointCovariance, DegenerateControl) {
  EXPECT_THROW(endpoint_covariance({{0.01, 0, 0.1, 0.1}, kReferenceControl, ""}, 10, 10),
               DegenerateDenominator);
}

TEST(Certificate, ReferenceControlA) {
  const auto c = theorem2_certificate(scenario_table()[0], 20000, 20000);
  EXPECT_NEAR(c.A, 0.015 * 0.009 + 0.015 * 0.970 - 0.001 * 0.005, 1e-15);
  EXPECT_NEAR(c.A, 0.01468, 1e-15);
  EXPECT_TRUE(c.certified());
}

TEST(Certificate, AgreesWithDeltaMethodCovariance) {
  Rng rng(31);
  for (int i = 0; i < 5000; ++i) {
    const auto t = draw_trial(rng, i % 3 ? StageLethality::Ordered : StageLethality::Reversed);
    const double m = 500.0 + (i % 7) * 1000.0;
    const auto c = theorem2_certificate(t, 2000, m);
    const auto cov = endpoint_covariance(t, 2000, m);
    ASSERT_NEAR(c.cov12, cov.cov_SM, 1e-12 * std::max(1.0, std::abs(cov.cov_SM)));
  }
}

TEST(Certificate, SignUnderAssumptionOnly) {
  Rng rng(2);
  int reversed_nonpositive = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto ok = theorem2_certificate(draw_trial(rng, StageLethality::Ordered), 20000, 20000);
    ASSERT_TRUE(ok.assumption_holds);
    ASSERT_TRUE(ok.certified()) << "A=" << ok.A << " B=" << ok.B << " cov=" << ok.cov12;
    const auto bad = theorem2_certificate(draw_trial(rng, StageLethality::Reversed), 20000, 20000);
    EXPECT_FALSE(bad.assumption_holds);
    EXPECT_FALSE(bad.certified());
    reversed_nonpositive += bad.A <= 0 || bad.B <= 0;
  }
  // The assumption is sufficient, not necessary: reversed draws are mostly still positive.
  EXPECT_LT(reversed_nonpositive, 10000);
}

TEST(MarginalVariances, MatchesCovarianceDiagonal) {
  Rng rng(19);
  for (int i = 0; i < 1000; ++i) {
    const auto t = draw_trial(rng, StageLethality::Ordered);
    const double n = 20000, m = 5000.0 + 10 * i;
    const auto cov = endpoint_covariance(t, n, m);
    const auto mv = marginal_variances(t.control.p_late, t.screen.p_late, t.control.p_death(),
                                       t.screen.p_death(), n, m);
    ASSERT_LT(rel(mv.var_S, cov.var_S), 1e-10);
    ASSERT_LT(rel(mv.var_M, cov.var_M), 1e-10);
  }
}

TEST(MarginalVariances, Scaling) {
  const auto one = marginal_variances(0.02, 0.015, 0.016, 0.012, 10000, 10000);
  const auto same_ratio = marginal_variances(0.02, 0.015, 0.016, 0.012, 20000, 20000);
  EXPECT_DOUBLE_EQ(one.var_M, same_ratio.var_M);  // Var(M_hat) = var_M / n halves
  const auto zero_screen = marginal_variances(0.02, 0.0, 0.016, 0.0, 100, 100);
  EXPECT_EQ(zero_screen.var_S, 0.0);
  EXPECT_EQ(zero_screen.var_M, 0.0);
  EXPECT_THROW(marginal_variances(0.0, 0.1, 0.1, 0.1, 10, 10), DegenerateDenominator);
}

// Equal death rates p = 0.016 at n = m: the standard delta-method form gives
// 2 (1 - p) / p = 123, a form without 1/a^2 on the control term about 61.5.
// Simulation decides between them.
TEST(MarginalVariances, MonteCarloSelectsDeltaMethodForm) {
  const double n = 20000;
  const double analytic = marginal_variances(0.02, 0.02, 0.016, 0.016, n, n).var_M;
  EXPECT_NEAR(analytic, 123.0, 1e-9);
  const int reps = 4000;
  std::vector<double> m_hat(reps);
  for (int r = 0; r < reps; ++r) {
    Rng rng(SeedSpec{99, 0, std::uint64_t(r)}, StreamTag::Parameters);
    const auto dc = sample_binomial(std::int64_t(n), 0.016, rng);
    const auto ds = sample_binomial(std::int64_t(n), 0.016, rng);
    m_hat[r] = std::sqrt(n) * (1.0 - double(ds) / double(dc));
  }
  const double var = oracle::sample_moments(m_hat, m_hat).var_x;
  EXPECT_NEAR(var, analytic, 0.08 * analytic);
  EXPECT_GT(std::abs(var - 61.5), 0.3 * 61.5);
}

TEST(EndpointCovariance, MonteCarloScenario1) {
  const auto params = scenario_table()[0];
  const double n = 20000;
  const auto cov = endpoint_covariance(params, n, n);
  const int reps = 5000;
  std::vector<double> s(reps), m(reps);
  for (int r = 0; r < reps; ++r) {
    const auto e = simulate_trial(params, 20000, 20000, {2718, 0, std::uint64_t(r)}).estimate;
    s[r] = std::sqrt(n) * e.S_hat;
    m[r] = std::sqrt(n) * e.M_hat;
  }
  const auto mom = oracle::sample_moments(s, m);
  EXPECT_LT(rel(mom.var_x, cov.var_S), 0.10);
  EXPECT_LT(rel(mom.var_y, cov.var_M), 0.10);
  EXPECT_LT(rel(mom.cov, cov.cov_SM), 0.10);
  EXPECT_GT(mom.cov, 0.0);
}

TEST(DrawArm, RespectsBoxAndOrdering) {
  Rng rng(4);
  for (int i = 0; i < 5000; ++i) {
    const auto a = draw_arm(rng, StageLethality::Ordered);
    ASSERT_GT(a.p_early, 0.001);
    ASSERT_LT(a.p_late, 0.1);
    ASSERT_LT(a.p_early + a.p_late, 0.15);
    ASSERT_LT(a.p_death_early, a.p_death_late);
    ASSERT_TRUE(validate(a).ok());
    const auto b = draw_arm(rng, StageLethality::Reversed);
    ASSERT_GT(b.p_death_early, b.p_death_late);
  }
}
