#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hcrep/bounds.hpp"

using namespace hcrep;

namespace {

CommonParams paper_params(std::int64_t m, int l_max = 4) {
  CommonParams cp;
  cp.k = 4;
  cp.l_max = l_max;
  cp.m = m;
  cp.q = Ratio(1, 32);
  cp.zeta = Ratio(1, 4);
  cp.r1 = Ratio(1, 2);
  cp.r2 = Ratio(3, 4);
  return cp;
}

ConnectivityParams lateral_worked_example() { return {Ratio(3, 4), Ratio(11, 16), Ratio(3, 4), 320, 320}; }

}  // namespace

TEST(Ratio, ParseAndArithmetic) {
  EXPECT_EQ(Ratio::parse("3/4"), Ratio(3, 4));
  EXPECT_EQ(Ratio::parse("0.75"), Ratio(3, 4));
  EXPECT_EQ(Ratio::parse("-2/3"), Ratio(-2, 3));
  EXPECT_EQ(Ratio::from_double(0.03125), Ratio(1, 32));
  EXPECT_EQ(Ratio::from_double(0.1), Ratio(1, 10));
  EXPECT_EQ(Ratio(1, 3) + Ratio(1, 6), Ratio(1, 2));
  EXPECT_LT(Ratio(1, 3), Ratio(1, 2));
  EXPECT_EQ(ceil_mul(Ratio(3, 4), 640), 480);
  EXPECT_EQ(ceil_mul(Ratio(11, 16), 640), 440);
  EXPECT_EQ(ceil_mul(Ratio(1, 3), 4), 2);
  EXPECT_TRUE(at_least(2, Ratio(2)));
  EXPECT_FALSE(at_least(2, Ratio(201, 100)));
  EXPECT_THROW(Ratio::parse("x"), std::invalid_argument);
  EXPECT_THROW(Ratio::parse("1/0"), std::invalid_argument);
}

TEST(Chernoff, Values) {
  EXPECT_NEAR(chernoff_lower_tail(310, 0.25), 6.20543465e-5, 1e-12);
  EXPECT_DOUBLE_EQ(chernoff_lower_tail(310, 0), 1.0);
  EXPECT_LT(chernoff_lower_tail(620, 0.25), chernoff_lower_tail(310, 0.25));
  EXPECT_THROW(chernoff_lower_tail(0, 0.25), std::invalid_argument);
}

TEST(Chernoff, BoundsBinomialLowerTail) {
  std::mt19937_64 rng(7);
  for (const int m : {50, 200}) {
    const double p = 0.9, z = 0.1;
    std::binomial_distribution<int> d(m, p);
    const int trials = 20000;
    int below = 0;
    for (int i = 0; i < trials; ++i)
      if (d(rng) <= (1 - z) * m * p) ++below;
    const double emp = static_cast<double>(below) / trials;
    const double se = std::sqrt(std::max(emp * (1 - emp), 1.0 / trials) / trials);
    EXPECT_LE(emp, chernoff_lower_tail(m * p, z) + 3 * se);
  }
}

TEST(Thresholds, WorkedNumbers) {
  const auto cp = paper_params(320);
  EXPECT_EQ(tau_high(cp), Ratio(1395, 2));
  EXPECT_EQ(tau_low(cp, Ratio(1)), tau_high(cp));
  EXPECT_EQ(tau_low(paper_params(640), Ratio(3, 4)), Ratio(4185, 4));
  EXPECT_EQ(epsilon(cp), Ratio(35, 128));
  EXPECT_EQ(firing_floor(cp), Ratio(465, 2));
  CommonParams z = cp;
  z.q = Ratio(0);
  z.zeta = Ratio(0);
  EXPECT_EQ(epsilon(z), Ratio(0));
}

TEST(Params, Validation) {
  auto cp = paper_params(320);
  cp.r1 = Ratio(7, 8);
  try {
    cp.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("r1 ≤ r2"), std::string::npos);
  }
  auto good = paper_params(640);
  ConnectivityParams bad{Ratio(3, 4), Ratio(1, 2), Ratio(1, 2), 320, 320};
  EXPECT_THROW(bad.validate(good), std::invalid_argument);  // a2 < (a - a1) k = 1
  ConnectivityParams sum_bad{Ratio(3, 4), Ratio(11, 16), Ratio(1, 4), 300, 320};
  EXPECT_THROW(sum_bad.validate(good), std::invalid_argument);
  EXPECT_NO_THROW(lateral_worked_example().validate(good));
}

TEST(DeltaHigh, WorkedExample) {
  const auto cp = paper_params(320);
  const auto exact = delta_ff_high(cp);
  ASSERT_EQ(exact.size(), 5u);
  EXPECT_NEAR(exact[4], 0.0211605321653625, 1e-12);
  EXPECT_NEAR(exact[0], 6.20543465e-5, 1e-12);
  const auto paper = delta_ff_high(cp, Pipeline::PaperStyle);
  EXPECT_NEAR(paper[4], 256 * std::exp(-9.7), 1e-12);
  EXPECT_GE(paper[4], 0.014);
  EXPECT_LE(paper[4], 0.018);
}

TEST(DeltaHigh, ShrinksWithM) {
  double prev = 1e300;
  for (const std::int64_t m : {80, 160, 320, 640, 1280}) {
    const auto d = delta_ff_high(paper_params(m));
    EXPECT_LT(d[4], prev);
    prev = d[4];
  }
  EXPECT_LT(delta_ff_high(paper_params(100000))[4], 1e-100);
}

TEST(DeltaLow, WorkedExample) {
  const auto cp = paper_params(640);
  const auto t = delta_terms_low(cp, Ratio(3, 4));
  EXPECT_NEAR(t[4].term(0), 1.31310299566e-6, 1e-15);
  EXPECT_NEAR(t[4].term(1), 0.106369520344978, 1e-12);
  const auto p = delta_terms_low(cp, Ratio(3, 4), Pipeline::PaperStyle);
  EXPECT_NEAR(p[4].term(1), 163840 * std::exp(-14.5), 1e-12);
  EXPECT_LT(p[4].term(0), 1e-5);
  const auto high = delta_ff_high(cp), low1 = delta_ff_low(cp, Ratio(1));
  for (std::size_t l = 1; l < high.size(); ++l) EXPECT_GT(low1[l], high[l]);
  EXPECT_DOUBLE_EQ(low1[0], high[0]);
}

TEST(DeltaLateral, WorkedExample) {
  const auto cp = paper_params(640);
  const auto t = delta_terms_lateral(cp, lateral_worked_example());
  EXPECT_NEAR(t[4].term(0), 1.31310299566e-6, 1e-15);
  EXPECT_NEAR(t[4].term(1), 0.0531847601724889, 1e-12);
  EXPECT_NEAR(t[4].term(2), 0.178521562525462, 1e-12);
  EXPECT_NEAR(t[4].term(3), 0.0132961900431222, 1e-12);
  EXPECT_NEAR(t[4].total(), 0.245004, 1e-5);
  const auto p = delta_terms_lateral(cp, lateral_worked_example(), Pipeline::PaperStyle);
  EXPECT_NEAR(p[4].total(), 0.188820645814499, 1e-12);
}

TEST(DeltaLateral, EmptyClassTwoReducesToLow) {
  const auto cp = paper_params(640);
  const ConnectivityParams c{Ratio(3, 4), Ratio(11, 16), Ratio(1, 4), 640, 0};
  const auto lat = delta_lateral(cp, c), low = delta_ff_low(cp, Ratio(3, 4));
  for (std::size_t l = 0; l < lat.size(); ++l) EXPECT_NEAR(lat[l], low[l], 1e-15 * std::max(1.0, low[l]));
  const auto t = delta_terms_lateral(cp, c);
  EXPECT_EQ(t[3].term(2), 0.0);
  EXPECT_EQ(t[3].term(3), 0.0);
}

TEST(Delta, LogSpaceForHugeExponents) {
  auto cp = paper_params(200000);
  cp.zeta = Ratio(1);
  const auto r = bounds_report(ReprKind::HighFF, cp, {});
  EXPECT_TRUE(std::isfinite(r.log_delta[4]));
  EXPECT_LT(r.log_delta[4], -9e4);
  auto small = paper_params(4);
  const auto v = bounds_report(ReprKind::HighFF, small, {});
  EXPECT_GT(v.delta[4], 1.0);
  EXPECT_DOUBLE_EQ(v.delta_clamped[4], 1.0);
}

TEST(Delta, NondecreasingInLevelAndOrdered) {
  const auto cp = paper_params(640);
  const auto conn = lateral_worked_example();
  const auto h = delta_ff_high(cp), lo = delta_ff_low(cp, conn.a), la = delta_lateral(cp, conn);
  for (std::size_t l = 1; l < h.size(); ++l) {
    EXPECT_GE(h[l], h[l - 1]);
    EXPECT_GE(lo[l], lo[l - 1]);
    EXPECT_GE(la[l], la[l - 1]);
  }
  for (std::size_t l = 0; l < h.size(); ++l) {
    EXPECT_LE(h[l], lo[l]);
    EXPECT_LE(lo[l], la[l] * (1 + 1e-12));
  }
}

TEST(BinomialTail, SmallCases) {
  EXPECT_NEAR(binomial_upper_tail(4, 0.9, 2), 0.9963, 1e-12);
  EXPECT_NEAR(binomial_upper_tail(8, 0.9, 6), 0.96190821, 1e-10);
  EXPECT_DOUBLE_EQ(binomial_upper_tail(10, 0.3, 0), 1.0);
  EXPECT_DOUBLE_EQ(binomial_upper_tail(10, 0.3, 11), 0.0);
  EXPECT_DOUBLE_EQ(binomial_upper_tail(10, 1.0, 10), 1.0);
  EXPECT_TRUE(std::isfinite(log_binomial_upper_tail(10000, 0.5, 9000)));
}

TEST(Constraint2, TrivialCases) {
  EXPECT_DOUBLE_EQ(constraint2_analytic(3, 10, 1.0, Ratio(1, 2), Ratio(3, 4)), 1.0);
  EXPECT_NEAR(constraint2_analytic(3, 10, 0.4, Ratio(0), Ratio(0)), 1.0, 1e-12);
  EXPECT_THROW(constraint2_analytic(2, 4, 0.5, Ratio(3, 4), Ratio(1, 2)), std::invalid_argument);
  EXPECT_THROW(constraint2_analytic(2, 4, 0.0, Ratio(1, 2), Ratio(3, 4)), std::domain_error);
}

TEST(Constraint2, MatchesBruteForce) {
  // Brute-force enumeration over all k*m edge patterns.
  auto t = constraint2_terms(2, 4, 0.9, Ratio(1, 2), Ratio(3, 4));
  EXPECT_FALSE(t.a_subset_b);
  EXPECT_NEAR(t.pr_a, 0.99261369, 1e-10);
  EXPECT_NEAR(t.pr_b, 0.96190821, 1e-10);
  EXPECT_NEAR(t.conditional, 1.0, 1e-12);
  EXPECT_NEAR(t.ratio, 1.0319214241866173, 1e-10);

  t = constraint2_terms(3, 5, 0.7, Ratio(2, 5), Ratio(3, 5));
  EXPECT_NEAR(t.pr_a_and_b, 0.8352132927919838, 1e-10);
  EXPECT_NEAR(t.conditional, 0.961277727744191, 1e-10);

  t = constraint2_terms(2, 6, 0.6, Ratio(1, 2), Ratio(1, 2));
  EXPECT_TRUE(t.a_subset_b);
  EXPECT_NEAR(t.conditional, 0.8003355645181345, 1e-10);
  EXPECT_NEAR(t.ratio, t.conditional, 1e-12);
}
