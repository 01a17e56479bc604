#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "surrogate/asymptotics.hpp"
#include "surrogate/inference.hpp"
#include "surrogate/sampling.hpp"

using namespace surrogate;

TEST(StudentT, ClosedFormsAndSymmetry) {
  EXPECT_EQ(student_t_sf(0.0, 3), 0.5);
  EXPECT_EQ(student_t_sf(0.0, 57), 0.5);
  EXPECT_NEAR(student_t_sf(1.0, 1), 0.25, 1e-15);
  // Cauchy: 1/2 - atan(t)/pi.
  EXPECT_NEAR(student_t_sf(3.0, 1), 0.5 - std::atan(3.0) / M_PI, 1e-15);
  // df = 2: 1/2 - t / (2 sqrt(2 + t^2)).
  EXPECT_NEAR(student_t_sf(1.5, 2), 0.5 - 1.5 / (2 * std::sqrt(2 + 2.25)), 1e-15);
  for (double t : {0.3, 1.7, 4.2}) EXPECT_NEAR(student_t_sf(-t, 6) + student_t_sf(t, 6), 1.0, 1e-15);
  EXPECT_THROW(student_t_sf(1.0, 0.5), DomainError);
}

TEST(StudentT, CriticalValueForTenTrials) { EXPECT_NEAR(student_t_sf(2.306, 8), 0.025, 5e-4); }

// Reference values computed offline with 30-digit arithmetic.
TEST(StudentT, FrozenHighPrecisionValues) {
  struct Case { double t, df, sf; };
  const Case cases[] = {
      {2.306, 8, 0.0250001613806421123},  {1, 1, 0.25},
      {0.5, 3, 0.3257239824240754972},    {4.3, 8, 0.001307877638977532796},
      {1.5, 2, 0.1361965624455005397},    {3.0, 25, 0.00301908978257174356},
      {-2, 5, 0.9490302605850708219},     {10, 8, 4.244090763814246023e-6},
      {0.1, 100, 0.4602722655479256161},
  };
  for (const auto& c : cases) EXPECT_NEAR(student_t_sf(c.t, c.df), c.sf, 1e-13 * std::max(c.sf, 1e-3)) << c.t;
}

TEST(StudentT, AgreesWithQuadrature) {
  for (double df : {1.0, 2.0, 5.0, 8.0, 30.0})
    for (double t : {-3.0, -0.7, 0.2, 1.0, 2.5, 6.0})
      EXPECT_NEAR(student_t_sf(t, df), oracle::t_sf_quadrature(t, df), 1e-9) << t << "," << df;
}

TEST(NormalQuantile, KnownValues) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
  EXPECT_NEAR(normal_quantile(0.95), 1.644853626951473, 1e-14);
  EXPECT_EQ(normal_quantile(0.5), 0.0);
  EXPECT_THROW(normal_quantile(1.0), DomainError);
}

TEST(OlsFit, ExactLines) {
  const auto up = ols_fit(std::vector<DataPoint>{{0, 0}, {1, 1}, {2, 2}});
  EXPECT_NEAR(up.beta1, 1.0, 1e-15);
  EXPECT_NEAR(up.beta0, 0.0, 1e-15);
  for (double e : up.residuals) EXPECT_NEAR(e, 0.0, 1e-15);
  EXPECT_EQ(up.p_value, 0.0);
  EXPECT_TRUE(up.rejects(0.05));

  const auto down = ols_fit(std::vector<DataPoint>{{0, 1}, {1, 0}, {2, -1}});
  EXPECT_NEAR(down.beta1, -1.0, 1e-15);
  EXPECT_NEAR(down.beta0, 1.0, 1e-15);
}

TEST(OlsFit, TextbookExample) {
  // y = 1 + 2x with residuals (+1, -1, -1, +1) around the fitted line.
  const std::vector<DataPoint> pts{{0, 2}, {1, 2}, {2, 4}, {3, 8}};
  const auto f = ols_fit(pts);
  // Sxx = 5, Sxy = 10 -> b1 = 2, b0 = 4 - 2*1.5 = 1; residuals 1, -1, -1, 1.
  EXPECT_NEAR(f.beta1, 2.0, 1e-14);
  EXPECT_NEAR(f.beta0, 1.0, 1e-14);
  EXPECT_NEAR(f.se_beta1, std::sqrt(4.0 / 2 / 5), 1e-14);
  EXPECT_EQ(f.df, 2);
  EXPECT_NEAR(f.t_stat, 2.0 / std::sqrt(0.4), 1e-12);
  EXPECT_NEAR(f.p_value, 2 * (0.5 - f.t_stat / (2 * std::sqrt(2 + f.t_stat * f.t_stat))), 1e-14);
  ASSERT_TRUE(f.r_pearson);
  EXPECT_NEAR(*f.r_pearson, 10.0 / std::sqrt(5.0 * 24.0), 1e-14);
}

TEST(OlsFit, Errors) {
  EXPECT_THROW(ols_fit(std::vector<DataPoint>{{0, 0}, {1, 1}}), InsufficientData);
  EXPECT_THROW(ols_fit(std::vector<DataPoint>{{0.5, 0}, {0.5, 1}, {0.5, 2}}), NonIdentifiable);
  EXPECT_THROW(ols_fit(std::vector<DataPoint>{{0, 0}, {1, 1}, {2, 0}}, std::vector<double>{1, 2}), DomainError);
  EXPECT_THROW(ols_fit(std::vector<DataPoint>{{0, 0}, {1, 1}, {2, 0}}, std::vector<double>{1, 0, 1}), DomainError);
}

TEST(OlsFit, ConstantResponseHasNoCorrelation) {
  const auto f = ols_fit(std::vector<DataPoint>{{0, 1}, {1, 1}, {2, 1}, {3, 1}});
  EXPECT_EQ(f.beta1, 0.0);
  EXPECT_EQ(f.p_value, 1.0);
  EXPECT_FALSE(f.r_pearson.has_value());
}

TEST(OlsFit, EqualWeightsReproduceUnweightedFit) {
  Rng rng(3);
  std::vector<DataPoint> pts(12);
  for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
  const auto plain = ols_fit(pts);
  const auto weighted = ols_fit(pts, std::vector<double>(pts.size(), 3.7));
  EXPECT_EQ(plain.beta1, weighted.beta1);
  EXPECT_EQ(plain.beta0, weighted.beta0);
  EXPECT_EQ(plain.se_beta1, weighted.se_beta1);
  EXPECT_EQ(plain.p_value, weighted.p_value);
  EXPECT_TRUE(weighted.weighted);
}

TEST(OlsFit, WeightedMatchesReplicatedPoints) {
  // Integer weights behave like repeated rows for the point estimates.
  const std::vector<DataPoint> pts{{0, 0.1}, {1, 0.8}, {2, 2.3}, {3, 2.9}};
  const auto w = ols_fit(pts, std::vector<double>{1, 2, 1, 3});
  const auto rep = ols_fit(std::vector<DataPoint>{{0, 0.1}, {1, 0.8}, {1, 0.8}, {2, 2.3},
                                                  {3, 2.9}, {3, 2.9}, {3, 2.9}});
  EXPECT_NEAR(w.beta1, rep.beta1, 1e-12);
  EXPECT_NEAR(w.beta0, rep.beta0, 1e-12);
}

TEST(OlsFit, AffineAndPermutationInvariance) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<DataPoint> pts(10);
    for (auto& p : pts) p = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const auto base = ols_fit(pts);
    const double a = rng.uniform(-5, 5), b = rng.uniform(0.1, 4) * (trial % 2 ? 1 : -1);
    auto moved = pts;
    for (auto& p : moved) p.y = a + b * p.y;
    const auto f = ols_fit(moved);
    ASSERT_NEAR(f.beta1, b * base.beta1, 1e-10);
    ASSERT_NEAR(std::abs(f.t_stat), std::abs(base.t_stat), 1e-9);

    auto shuffled = pts;
    std::reverse(shuffled.begin(), shuffled.end());
    std::rotate(shuffled.begin(), shuffled.begin() + 3, shuffled.end());
    const auto g = ols_fit(shuffled);
    ASSERT_NEAR(g.beta1, base.beta1, 1e-12);
    ASSERT_NEAR(g.p_value, base.p_value, 1e-12);
  }
}

TEST(OlsFit, NullRejectionRateIsNominal) {
  // Independent normal-ish noise: rejection at 0.05 should be ~5%.
  Rng rng(8);
  int rejections = 0;
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    std::vector<DataPoint> pts(10);
    for (auto& p : pts) {
      double x = 0, y = 0;
      for (int k = 0; k < 12; ++k) x += rng.uniform(), y += rng.uniform();
      p = {x, y};
    }
    rejections += ols_fit(pts).rejects(0.05);
  }
  EXPECT_NEAR(double(rejections) / reps, 0.05, 4 * std::sqrt(0.05 * 0.95 / reps));
}

TEST(PearsonCi, BoundaryAndSymmetry) {
  const auto perfect = pearson_ci(std::vector<DataPoint>{{0, 0}, {1, 2}, {2, 4}, {3, 6}, {4, 8}});
  EXPECT_EQ(perfect.r, 1.0);
  EXPECT_EQ(perfect.hi, 1.0);

  // Seven pairs with exactly zero correlation.
  const std::vector<DataPoint> zero{{-3, 1}, {-2, -1}, {-1, 0}, {0, 0}, {1, 0}, {2, -1}, {3, 1}};
  const auto ci = pearson_ci(zero, 0.95);
  EXPECT_NEAR(ci.r, 0.0, 1e-15);
  EXPECT_NEAR(ci.hi, -ci.lo, 1e-15);
  EXPECT_NEAR(ci.hi, 0.75305810936622, 1e-12);
  EXPECT_NEAR(ci.hi, std::tanh(1.96 / 2), 1e-4);
}

TEST(PearsonCi, SignFlipMirrors) {
  Rng rng(5);
  std::vector<DataPoint> pts(9);
  for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
  for (int i = 0; i < 9; ++i) pts[i].y += 0.3 * pts[i].x;
  auto flipped = pts;
  for (auto& p : flipped) p.y = -p.y;
  const auto a = pearson_ci(pts), b = pearson_ci(flipped);
  EXPECT_NEAR(a.r, -b.r, 1e-14);
  EXPECT_NEAR(a.lo, -b.hi, 1e-14);
  EXPECT_NEAR(a.hi, -b.lo, 1e-14);
  EXPECT_LE(a.lo, a.r);
  EXPECT_GE(a.hi, a.r);
  EXPECT_THROW(pearson_ci(std::vector<DataPoint>{{0, 0}, {1, 1}, {2, 3}}), InsufficientData);
}

// Pooled fit of many Scenario 1 estimates recovers cov / var_S from the delta method.
TEST(OlsFit, NoiseOnlySlopeMatchesAsymptotics) {
  const auto params = scenario_table()[0];
  const auto cov = endpoint_covariance(params, 20000, 20000);
  const double expected = *cov.rho * std::sqrt(cov.var_M / cov.var_S);
  EXPECT_NEAR(expected, 91.75 / 98.0, 1e-12);
  std::vector<DataPoint> pts;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const auto e = simulate_trial(params, 20000, 20000, {606, 0, r}).estimate;
    pts.push_back({e.S_hat, e.M_hat});
  }
  EXPECT_NEAR(ols_fit(pts).beta1, expected, 0.1);
}

// Near-noiseless estimates reproduce the oracle regression on true values.
TEST(OlsFit, PracticalConvergesToOracleForHugeTrials) {
  const auto table = scenario_table();
  double gap = 0;
  int used = 0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    Rng pick(SeedSpec{31, 0, rep}, StreamTag::ScenarioDraw);
    std::vector<DataPoint> truth, est;
    for (std::uint64_t t = 0; t < 10; ++t) {
      const auto& params = table[pick.below(4)];
      const auto e = derive_endpoints(params);
      truth.push_back({e.S, e.M});
      const auto h = simulate_trial(params, 10'000'000, 10'000'000, {31, t, rep}).estimate;
      est.push_back({h.S_hat, h.M_hat});
    }
    try {
      gap += ols_fit(est).beta1 - ols_fit(truth).beta1;
      ++used;
    } catch (const NonIdentifiable&) {
    }
  }
  ASSERT_GT(used, 190);
  EXPECT_LT(std::abs(gap / used), 0.02);
}
