#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chance/utility_forms.hpp"

using namespace chance;

TEST(Archetypal, Examples) {
  EXPECT_DOUBLE_EQ(archetypal_utility({0.7, 1.0, 1.0, 0.1}), 0.7);
  EXPECT_DOUBLE_EQ(archetypal_utility({0.5, 1.0, 2.0, 0.1}), 0.25);
  EXPECT_EQ(archetypal_utility({1.0, 3.0, 0.2, 0.1}), 1.0);
  EXPECT_EQ(archetypal_utility({0.0, 3.0, 0.2, 0.1}), 0.0);
}

TEST(Archetypal, AnchorsForRandomParameters) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> lp(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double x = std::exp(lp(gen)), b = std::exp(lp(gen));
    EXPECT_EQ(archetypal_utility({0.0, x, b, 0.1}), 0.0);
    EXPECT_EQ(archetypal_utility({1.0, x, b, 0.1}), 1.0);
  }
}

TEST(Archetypal, DiagonalGeometry) {
  for (int k = 1; k < 20; ++k) {
    const double f = k / 20.0;
    EXPECT_GT(archetypal_utility({f, 2.0, 1.0, 0.1}), f);  // beta_u < x: above
    EXPECT_LT(archetypal_utility({f, 1.0, 2.0, 0.1}), f);  // beta_u > x: below
  }
}

TEST(Archetypal, RejectsInvalidContext) {
  EXPECT_THROW(archetypal_utility({1.2, 1.0, 1.0, 0.1}), std::invalid_argument);
  EXPECT_THROW(archetypal_utility({0.5, 0.0, 1.0, 0.1}), std::invalid_argument);
  EXPECT_THROW(archetypal_utility({0.5, 1.0, -1.0, 0.1}), std::invalid_argument);
  EXPECT_THROW(cost_disutility({0.5, 1.0, 1.0, 0.0}), std::invalid_argument);
}

TEST(CostDisutility, Examples) {
  EXPECT_EQ(cost_disutility({0.0, 1.0, 1.0, 0.1}).value, 0.0);
  EXPECT_NEAR(cost_disutility({0.8, 1.0, 1.0, 0.1}).value, 0.329680, 1e-6);
  EXPECT_NEAR(cost_disutility({0.8, 1.0, 1.0, 0.1}).value, 1.0 - std::exp(-0.4), 1e-15);
  EXPECT_GT(cost_disutility({0.999999, 1.0, 1.0, 0.1}).value, 0.99);
  const auto sat = cost_disutility({1.0, 1.0, 1.0, 0.1});
  EXPECT_EQ(sat.value, 1.0);
  EXPECT_TRUE(sat.saturated);
  EXPECT_FALSE(cost_disutility({0.5, 1.0, 1.0, 0.1}).saturated);
}

TEST(Monotonicity, ArchetypalAndDisutilityNonDecreasing) {
  for (double b : {0.3, 1.0, 4.0}) {
    double pa = -1, pd = -1;
    for (int k = 0; k <= 100; ++k) {
      const ReliabilityContext ctx{k / 100.0, 1.0, b, 0.2};
      EXPECT_GE(archetypal_utility(ctx), pa);
      EXPECT_GE(cost_disutility(ctx).value, pd);
      pa = archetypal_utility(ctx), pd = cost_disutility(ctx).value;
    }
  }
}

TEST(Omnibus, Examples) {
  EXPECT_NEAR(omnibus_utility({0.8, 1.0, 1.0, 0.1}).value, 0.470320, 1e-6);
  EXPECT_EQ(omnibus_utility({0.0, 1.0, 1.0, 0.1}).value, 0.0);
  EXPECT_NEAR(omnibus_utility({0.6, 1.0, 1.5, 1e-12}).value, archetypal_utility({0.6, 1.0, 1.5, 1e-12}), 1e-10);
  EXPECT_TRUE(omnibus_utility({1.0, 1.0, 1.0, 0.1}).saturated);
  EXPECT_EQ(omnibus_utility({1.0, 1.0, 1.0, 0.1}).value, 0.0);
  EXPECT_LT(omnibus_utility({0.9, 1.0, 1.0, 5.0}).value, 0.0);
}

TEST(ExpectedUtility, Examples) {
  const Outcome single[] = {{1.0, 0.42}};
  EXPECT_EQ(expected_utility(single), 0.42);
  const Outcome half[] = {{0.5, 0.0}, {0.5, 1.0}};
  EXPECT_EQ(expected_utility(half), 0.5);
  const Outcome three[] = {{0.2, 0.1}, {0.3, 0.4}, {0.5, 0.9}};
  EXPECT_NEAR(expected_utility(three), 0.59, 1e-12);
}

TEST(DecisionProblem, Validation) {
  EXPECT_THROW(DecisionProblem({}), std::invalid_argument);
  EXPECT_THROW(DecisionProblem({{{0.5, 0.1}, {0.4, 0.2}}}), std::invalid_argument);
  EXPECT_THROW(DecisionProblem({{{1.0, 1.2}}}), std::invalid_argument);
  EXPECT_THROW(DecisionProblem({{{-0.1, 0.2}, {1.1, 0.2}}}), std::invalid_argument);
}

TEST(BestAction, SingleDominatedAndTie) {
  EXPECT_EQ(best_action(DecisionProblem({{{1.0, 0.3}}})), 0u);
  EXPECT_EQ(best_action(DecisionProblem({{{1.0, 0.3}}, {{0.5, 0.4}, {0.5, 0.9}}})), 1u);
  EXPECT_EQ(best_action(DecisionProblem({{{1.0, 0.5}}, {{0.5, 0.0}, {0.5, 1.0}}})), 0u);
}

TEST(BestAction, InvariantUnderUtilityShift) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int s = 0; s < 100; ++s) {
    std::vector<std::vector<Outcome>> a, shifted;
    for (int i = 0; i < 4; ++i) {
      const double q = u(gen) * 2;
      a.push_back({{q, u(gen)}, {1 - q, u(gen)}});
      shifted.push_back({{q, a.back()[0].utility + 0.5}, {1 - q, a.back()[1].utility + 0.5}});
    }
    EXPECT_EQ(best_action(DecisionProblem(a)), best_action(DecisionProblem(shifted)));
  }
}

TEST(Survivability, Examples) {
  auto expo = [](double theta) { return std::exp(-theta * 1.0); };
  const PriorNode three[] = {{0.5, 1.0 / 3}, {1.0, 1.0 / 3}, {1.5, 1.0 / 3}};
  // (e^-0.5 + e^-1 + e^-1.5) / 3 = (0.6065307 + 0.3678794 + 0.2231302) / 3
  EXPECT_NEAR(survivability(expo, three), 0.399180, 1e-6);
  const PriorNode point[] = {{0.7, 1.0}};
  EXPECT_EQ(survivability(expo, point), std::exp(-0.7));
  EXPECT_NEAR(survivability([](double) { return 0.3; }, three), 0.3, 1e-15);
  const PriorNode bad[] = {{0.5, 0.5}};
  EXPECT_THROW(survivability(expo, bad), std::invalid_argument);
}

TEST(Survivability, BoundedBySupport) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  auto expo = [](double theta) { return std::exp(-theta); };
  for (int s = 0; s < 100; ++s) {
    std::vector<PriorNode> nodes;
    double total = 0, lo = 1, hi = 0;
    for (int i = 0; i < 5; ++i) {
      nodes.push_back({u(gen), u(gen) + 0.01});
      total += nodes.back().weight;
      lo = std::min(lo, expo(nodes.back().theta));
      hi = std::max(hi, expo(nodes.back().theta));
    }
    for (auto& n : nodes) n.weight /= total;
    const double v = survivability(expo, nodes);
    EXPECT_GE(v, lo - 1e-12);
    EXPECT_LE(v, hi + 1e-12);
  }
}
