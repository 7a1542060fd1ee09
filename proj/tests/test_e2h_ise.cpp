#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hierlab/e2h_ise.hpp"
#include "hierlab/error.hpp"
#include "oracles.hpp"

using namespace hierlab;

namespace {

CParams params(CMode mode, double c0, std::size_t w) {
  CParams p;
  p.mode = mode;
  p.c0 = c0;
  p.window = w;
  return p;
}

// Fills the training window with `successes` ones followed by zeros.
void fill(CController& c, std::size_t successes, std::size_t total) {
  for (std::size_t i = 0; i < total; ++i) c.record_train_outcome(i < successes);
}

}  // namespace

TEST(CController, SelfPacedIncrease) {
  auto p = params(CMode::kSelfPaced, 0.3, 10);
  p.delta = 0.05;
  p.psi_high = 0.8;
  CController c(p);
  fill(c, 9, 10);
  EXPECT_NEAR(c.next(0, 1000, 11), 0.35, 1e-12);
  EXPECT_EQ(c.train_window_size(), 0u);
}

TEST(CController, SelfPacedClipsAtOne) {
  CController c(params(CMode::kSelfPaced, 1.0, 4));
  fill(c, 4, 4);
  EXPECT_EQ(c.next(0, 1000, 5), 1.0);
  EXPECT_EQ(c.train_window_size(), 0u);
}

TEST(CController, SelfPacedHoldsBetweenThresholds) {
  auto p = params(CMode::kSelfPaced, 0.4, 10);
  p.psi_low = 0.2;
  p.psi_high = 0.8;
  CController c(p);
  fill(c, 5, 10);
  EXPECT_EQ(c.next(0, 1000, 11), 0.4);
  EXPECT_EQ(c.train_window_size(), 10u);
}

TEST(CController, SelfPacedDecrease) {
  auto p = params(CMode::kSelfPaced, 0.4, 10);
  p.psi_low = 0.3;
  CController c(p);
  fill(c, 1, 10);
  EXPECT_NEAR(c.next(0, 1000, 11), 0.35, 1e-12);
}

TEST(CController, SelfPacedWaitsForWindow) {
  CController c(params(CMode::kSelfPaced, 0.0, 5));
  fill(c, 5, 5);
  EXPECT_EQ(c.next(0, 1000, 5), 0.0);  // j must exceed w
  EXPECT_NEAR(c.next(0, 1000, 6), 0.05, 1e-12);
  // Window emptied: the next change needs w fresh outcomes.
  fill(c, 4, 4);
  EXPECT_NEAR(c.next(0, 1000, 10), 0.05, 1e-12);
  c.record_train_outcome(true);
  EXPECT_NEAR(c.next(0, 1000, 11), 0.10, 1e-12);
}

TEST(CController, ControlDecrease) {
  auto p = params(CMode::kControl, 0.5, 10);
  p.delta = 0.1;
  p.psi = 0.6;
  CController c(p);
  fill(c, 2, 10);
  EXPECT_NEAR(c.next(0, 1000, 11), 0.4, 1e-12);
  EXPECT_EQ(c.train_window_size(), 10u);
}

TEST(CController, ControlIncreaseAtTarget) {
  auto p = params(CMode::kControl, 0.5, 10);
  p.delta = 0.1;
  p.psi = 0.6;
  CController c(p);
  fill(c, 6, 10);
  EXPECT_NEAR(c.next(0, 1000, 11), 0.6, 1e-12);
}

TEST(CController, ControlAdaptiveTarget) {
  auto p = params(CMode::kControlAdaptive, 0.5, 4);
  p.shift = 0.2;
  p.psi_max = 0.9;
  p.delta = 0.1;
  CController c(p);
  for (double r : {0.4, 0.6, 0.5, 0.5}) c.record_eval_success(r);
  fill(c, 2, 4);  // 0.5 < 0.7
  EXPECT_NEAR(c.next(0, 1000, 5), 0.4, 1e-12);
  EXPECT_NEAR(c.adaptive_target(), 0.7, 1e-12);
  for (int i = 0; i < 4; ++i) c.record_eval_success(1.0);
  c.next(0, 1000, 6);
  EXPECT_NEAR(c.adaptive_target(), 0.9, 1e-12);
}

TEST(CController, PredefinedProfile) {
  auto p = params(CMode::kPredefined, 0.0, 4);
  p.z_sat = 0.5;
  CController c(p);
  EXPECT_EQ(c.next(0, 1000, 1), 0.0);
  EXPECT_NEAR(c.next(250, 1000, 2), 0.5, 1e-12);
  EXPECT_EQ(c.next(600, 1000, 3), 1.0);
  EXPECT_THROW(c.next(0, 0, 4), ConfigError);
}

TEST(CController, WindowRates) {
  CController c(params(CMode::kSelfPaced, 0.0, 4));
  fill(c, 4, 4);
  EXPECT_EQ(c.train_rate(), 1.0);
  for (bool s : {true, false, true, false}) c.record_train_outcome(s);
  EXPECT_EQ(c.train_rate(), 0.5);
  EXPECT_THROW(c.record_eval_success(1.2), InputError);
  EXPECT_THROW(c.record_eval_success(-0.1), InputError);
}

TEST(SampleInitial, ZeroScaleReturnsCenter) {
  const InitSpace s({0, -2, 1}, {4, 2, 2});
  Rng rng(1);
  const Rng before = rng;
  EXPECT_EQ(sample_initial(s, 0.0, rng), (std::vector<double>{2, 0, 1.5}));
  EXPECT_EQ(rng, before);
  EXPECT_THROW(sample_initial(s, 1.01, rng), InputError);
  EXPECT_THROW(sample_initial(s, -0.01, rng), InputError);
}

TEST(SampleInitial, HalfScaleBounds) {
  const InitSpace s({0, 0}, {4, 4});
  Rng rng(2);
  double lo = 10, hi = -10;
  for (int i = 0; i < 10000; ++i) {
    const auto v = sample_initial(s, 0.5, rng);
    for (double x : v) {
      ASSERT_GE(x, 1.0);
      ASSERT_LE(x, 3.0);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  EXPECT_LE(lo, 1.05);
  EXPECT_GE(hi, 2.95);
}

TEST(SampleInitial, FullScaleIsUniform) {
  const InitSpace s({-1, 0, 1}, {1, 4, 1.5});
  Rng rng(3);
  std::vector<std::vector<double>> axes(3);
  for (int i = 0; i < 10000; ++i) {
    const auto v = sample_initial(s, 1.0, rng);
    for (int a = 0; a < 3; ++a) axes[a].push_back(v[a]);
  }
  // One-sample 1% critical value for n = 1e4: 1.628 / sqrt(n).
  for (int a = 0; a < 3; ++a)
    EXPECT_LT(oracle::ks_uniform(axes[a], s.lower[a], s.upper[a]), 1.628 / 100.0) << "axis " << a;
}

// ---- properties ------------------------------------------------------------

TEST(E2hProperties, CStaysInUnitInterval) {
  std::mt19937_64 gen(31);
  for (int k = 0; k < 1000; ++k) {
    auto p = params(static_cast<CMode>(gen() % 4), std::uniform_real_distribution<double>(0, 1)(gen),
                    1 + gen() % 6);
    p.delta = std::uniform_real_distribution<double>(0, 1)(gen);
    p.psi_low = std::uniform_real_distribution<double>(0, 0.5)(gen);
    p.psi_high = std::uniform_real_distribution<double>(0.5, 1)(gen);
    p.psi = std::uniform_real_distribution<double>(0, 1)(gen);
    CController c(p);
    const std::int64_t total = 200;
    double prev = -1;
    for (std::int64_t j = 1; j <= 60; ++j) {
      c.record_train_outcome(gen() % 2);
      if (gen() % 5 == 0) c.record_eval_success(std::uniform_real_distribution<double>(0, 1)(gen));
      const double v = c.next(j * 3, total, j);
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
      if (p.mode == CMode::kPredefined) { ASSERT_GE(v, prev); }
      prev = v;
      ASSERT_LE(c.train_window_size(), p.window);
      ASSERT_LE(c.eval_window_size(), p.window);
    }
  }
}

TEST(E2hProperties, SupportShrinksWithScale) {
  std::mt19937_64 gen(32);
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> lo(3), hi(3);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::uniform_real_distribution<double>(-5, 0)(gen);
      hi[a] = lo[a] + std::uniform_real_distribution<double>(0.1, 5)(gen);
    }
    const InitSpace s(lo, hi);
    double c1 = std::uniform_real_distribution<double>(0, 1)(gen), c2 = std::uniform_real_distribution<double>(0, 1)(gen);
    if (c1 > c2) std::swap(c1, c2);
    const auto center = s.center();
    Rng rng(gen());
    const auto v = sample_initial(s, c1, rng);
    for (int a = 0; a < 3; ++a) {
      // Inside the c1 box, which itself lies inside the c2 box.
      const double l1 = center[a] - c1 * (center[a] - lo[a]), h1 = center[a] + c1 * (hi[a] - center[a]);
      const double l2 = center[a] - c2 * (center[a] - lo[a]), h2 = center[a] + c2 * (hi[a] - center[a]);
      ASSERT_GE(v[a], l1 - 1e-12);
      ASSERT_LE(v[a], h1 + 1e-12);
      ASSERT_GE(l1, l2 - 1e-12);
      ASSERT_LE(h1, h2 + 1e-12);
    }
  }
}
