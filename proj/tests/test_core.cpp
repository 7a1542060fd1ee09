#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hierlab/core.hpp"
#include "hierlab/error.hpp"
#include "oracles.hpp"

using namespace hierlab;

namespace {

Episode with_rewards(const std::vector<double>& rewards) {
  Episode e;
  for (double r : rewards) e.transitions.push_back({{{0.0}, {0.0}, {0.0}}, {0.0}, {{0.0}, {0.0}, {0.0}}, r, false});
  return e;
}

}  // namespace

TEST(SparseReward, ZeroDistanceIsSuccess) {
  const std::vector<double> g{0.3, -0.7};
  EXPECT_EQ(sparse_reward(g, g, {1e-9}), 0.0);
}

TEST(SparseReward, FarGoalIsFailure) {
  const std::vector<double> a{0.0, 0.0}, d{1.0, 0.0};
  EXPECT_EQ(sparse_reward(a, d, {0.5}), -1.0);
}

TEST(SparseReward, BoundaryIsInclusive) {
  const std::vector<double> a{0.0, 0.0}, d{0.3, 0.4};
  ASSERT_EQ(oracle::distance(a, d), 0.5);
  EXPECT_EQ(sparse_reward(a, d, {0.5}), 0.0);
}

TEST(SparseReward, DimensionMismatchRejected) {
  const std::vector<double> a{0.0, 0.0}, d{0.0};
  EXPECT_THROW(sparse_reward(a, d, {0.5}), InputError);
}

TEST(SparseReward, MatchesOracleAndIsTranslationInvariant) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> grid(-1024, 1024);
  // Dyadic coordinates keep every difference exact, so translation cannot move a boundary case.
  auto coord = [&] { return grid(rng) / 1024.0; };
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> a{coord(), coord()}, d{coord(), coord()};
    const double eps = (1 + grid(rng) % 512 + 512) / 1024.0;
    const double r = sparse_reward(a, d, {eps});
    EXPECT_EQ(r, oracle::reward(a, d, eps));
    const double sx = coord(), sy = coord();
    std::vector<double> a2{a[0] + sx, a[1] + sy}, d2{d[0] + sx, d[1] + sy};
    EXPECT_EQ(sparse_reward(a2, d2, {eps}), r);
  }
}

TEST(Returns, UndiscountedSums) {
  EXPECT_EQ(undiscounted_return(with_rewards({-1, -1, -1, -1, -1})), -5.0);
  EXPECT_EQ(undiscounted_return(with_rewards({-1, -1, 0})), -2.0);
  EXPECT_THROW(undiscounted_return(Episode{}), InputError);
}

TEST(Returns, Discounted) {
  EXPECT_DOUBLE_EQ(discounted_return(with_rewards({-1, -1}), 0.95), -1.95);
  EXPECT_EQ(discounted_return(with_rewards({0, 0, 0}), 0.3), 0.0);
  EXPECT_THROW(discounted_return(with_rewards({-1}), 1.5), InputError);
  EXPECT_THROW(discounted_return(with_rewards({-1}), -0.1), InputError);
}

TEST(Returns, BoundsAndGammaOneIdentity) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t len = 1 + rng() % 60;
    const Episode e = oracle::random_episode(rng, len);
    const double r = undiscounted_return(e);
    EXPECT_LE(r, 0.0);
    EXPECT_GE(r, -static_cast<double>(len));
    EXPECT_EQ(discounted_return(e, 1.0), r);
  }
}

TEST(GoalObservation, FlattenOrderAndValidation) {
  GoalObservation o{{1, 2, 3}, {4, 5}, {6, 7}};
  EXPECT_EQ(o.flatten(), (std::vector<double>{1, 2, 3, 4, 5, 6, 7}));
  EXPECT_NO_THROW(validate(o));
  o.desired_goal.push_back(8);
  EXPECT_THROW(validate(o), InputError);
  GoalObservation bad{{NAN}, {0}, {0}};
  EXPECT_THROW(validate(bad), InputError);
}
