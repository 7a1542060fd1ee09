#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hierlab/error.hpp"
#include "hierlab/stats.hpp"
#include "oracles.hpp"

using namespace hierlab;

namespace {

std::vector<double> random_scores(std::mt19937_64& g, std::size_t n, bool coarse) {
  std::vector<double> v(n);
  for (auto& x : v)
    x = coarse ? static_cast<double>(g() % 5) / 4.0 : std::uniform_real_distribution<double>(0.0, 1.0)(g);
  return v;
}

ScoreSet random_set(std::mt19937_64& g, std::size_t tasks, bool coarse) {
  ScoreSet s;
  for (std::size_t t = 0; t < tasks; ++t) s["task" + std::to_string(t)] = random_scores(g, 1 + g() % 10, coarse);
  return s;
}

// True when value is the multiple of 2^-53 nearest to the exact mean over
// tasks of the per-task pair-win fractions.
bool matches_exact_rational(double value, const ScoreSet& x, const ScoreSet& y) {
  using i128 = __int128;
  i128 lcm = 1;
  std::vector<std::pair<std::int64_t, std::int64_t>> parts;
  for (const auto& [task, xs] : x) {
    parts.push_back(oracle::pair_wins(xs, y.at(task)));
    lcm = std::lcm(static_cast<std::int64_t>(lcm), parts.back().second);
  }
  i128 num = 0;
  for (auto [n, d] : parts) num += static_cast<i128>(n) * (lcm / d);
  const i128 den = lcm * static_cast<i128>(parts.size());
  const double scaled = std::ldexp(value, 53);
  if (scaled != std::floor(scaled)) return false;
  const i128 k = static_cast<i128>(scaled);
  const i128 diff = k * den - (num << 53);
  return 2 * (diff < 0 ? -diff : diff) <= den;
}

}  // namespace

TEST(Aggregate, Examples) {
  const std::vector<double> eight{1, 2, 3, 4, 5, 6, 7, 8};
  EXPECT_EQ(aggregate(eight, Metric::kIqm), 4.5);
  EXPECT_EQ(aggregate(std::vector<double>(7, 0.3), Metric::kIqm), 0.3);
  EXPECT_EQ(aggregate(std::vector<double>{0.5, 1.0}, Metric::kOg, 1.0), 0.25);
  EXPECT_EQ(aggregate(std::vector<double>{1.0, 1.5, 2.0}, Metric::kOg, 1.0), 0.0);
  EXPECT_EQ(aggregate(std::vector<double>{0.5, 1.5}, Metric::kOg, 1.0), aggregate(std::vector<double>{0.5, 1.0}, Metric::kOg, 1.0));
  EXPECT_EQ(aggregate(eight, Metric::kMedian), 4.5);
  EXPECT_EQ(aggregate(std::vector<double>{3, 1, 2}, Metric::kMedian), 2.0);
  EXPECT_EQ(aggregate(eight, Metric::kMean), 4.5);
  EXPECT_THROW(aggregate(std::vector<double>{}, Metric::kMean), InputError);
  EXPECT_THROW(aggregate(std::vector<double>{NAN}, Metric::kMean), InputError);
  EXPECT_EQ(parse_metric("iqm"), Metric::kIqm);
  EXPECT_THROW(parse_metric("max"), InputError);
}

TEST(Aggregate, MatchesOracles) {
  std::mt19937_64 g(1);
  for (int c = 0; c < 1000; ++c) {
    const auto xs = random_scores(g, 1 + g() % 30, c % 2);
    EXPECT_NEAR(aggregate(xs, Metric::kIqm), oracle::iqm(xs), 1e-12);
    EXPECT_NEAR(aggregate(xs, Metric::kMean), oracle::mean(xs), 1e-12);
    EXPECT_EQ(aggregate(xs, Metric::kMedian), oracle::median(xs));
    EXPECT_NEAR(aggregate(xs, Metric::kOg, 0.8), oracle::og(xs, 0.8), 1e-12);
  }
}

TEST(Bootstrap, ConstantDataGivesPointInterval) {
  Rng rng(2);
  const std::vector<double> xs(10, 0.7);
  for (Metric m : {Metric::kMean, Metric::kMedian, Metric::kIqm, Metric::kOg}) {
    const auto ci = bootstrap_ci(xs, m, {}, rng);
    const double v = aggregate(xs, m);
    EXPECT_EQ(ci.lo, v);
    EXPECT_EQ(ci.hi, v);
  }
  const ScoreSet s{{"a", {0.4, 0.4}}, {"b", {0.4, 0.4, 0.4}}};
  const auto sci = stratified_bootstrap_ci(s, Metric::kIqm, {}, rng);
  EXPECT_EQ(sci.lo, sci.hi);
  EXPECT_NEAR(sci.lo, 0.4, 1e-15);
}

TEST(Bootstrap, OptionValidation) {
  Rng rng(3);
  const std::vector<double> xs{1, 2};
  BootstrapOptions o;
  o.n_resamples = 99;
  EXPECT_THROW(bootstrap_ci(xs, Metric::kMean, o, rng), InputError);
  o = {};
  o.level = 1.0;
  EXPECT_THROW(bootstrap_ci(xs, Metric::kMean, o, rng), InputError);
  EXPECT_THROW(bootstrap_ci(std::vector<double>{}, Metric::kMean, {}, rng), InputError);
  EXPECT_THROW(stratified_bootstrap_ci(ScoreSet{{"a", {}}}, Metric::kMean, {}, rng), InputError);
}

TEST(Bootstrap, TailProbabilities) {
  EXPECT_NEAR(percentile_tail(CiMethod::kPercentile, 0.95, 10), 0.025, 1e-15);
  // t_{0.975, 9} = 2.2621571627982053 from standard tables.
  const double z = std::sqrt(10.0 / 9.0) * 2.2621571627982053;
  EXPECT_NEAR(percentile_tail(CiMethod::kExpandedPercentile, 0.95, 10), 0.5 * std::erfc(z / std::sqrt(2.0)), 1e-12);
  // The correction vanishes as n grows.
  EXPECT_NEAR(percentile_tail(CiMethod::kExpandedPercentile, 0.95, 100000), 0.025, 1e-4);
  EXPECT_EQ(quantile_sorted(std::vector<double>{1, 2, 3, 4, 5}, 0.5), 3.0);
  EXPECT_EQ(quantile_sorted(std::vector<double>{1, 2}, 0.25), 1.25);
}

TEST(Bootstrap, CoverageOfNormalMean) {
  std::mt19937_64 g(4);
  std::normal_distribution<double> nd(0.0, 1.0);
  Rng rng(5);
  int covered = 0;
  const int datasets = 2000;
  for (int d = 0; d < datasets; ++d) {
    std::vector<double> xs(10);
    for (auto& x : xs) x = nd(g);
    const auto ci = bootstrap_ci(xs, Metric::kMean, {}, rng);
    covered += ci.lo <= 0.0 && 0.0 <= ci.hi;
  }
  const double rate = static_cast<double>(covered) / datasets;
  EXPECT_NEAR(rate, 0.95, 0.03) << "coverage " << rate;
}

TEST(Bootstrap, IntervalContainsEstimateAndStaysInRange) {
  std::mt19937_64 g(6);
  Rng rng(7);
  int contains = 0;
  const int trials = 300;
  for (int c = 0; c < trials; ++c) {
    const ScoreSet s = random_set(g, 1 + g() % 3, c % 2);
    BootstrapOptions o;
    o.n_resamples = 500;
    const Metric m = static_cast<Metric>(c % 3);
    const auto ci = stratified_bootstrap_ci(s, m, o, rng);
    const double est = pooled_aggregate(s, m);
    contains += ci.lo <= est && est <= ci.hi;
    double lo = 1e9, hi = -1e9;
    for (const auto& [t, xs] : s)
      for (double x : xs) lo = std::min(lo, x), hi = std::max(hi, x);
    // Averages of in-range values may round an ulp past the extremes.
    ASSERT_GE(ci.lo, lo - 1e-12);
    ASSERT_LE(ci.hi, hi + 1e-12);
    ASSERT_LE(ci.lo, ci.hi);
  }
  EXPECT_GE(contains, trials * 99 / 100);
}

TEST(Bootstrap, StratifiedSingleTaskMatchesPlain) {
  std::mt19937_64 g(8);
  const auto xs = random_scores(g, 10, false);
  const ScoreSet s{{"only", xs}};
  for (Metric m : {Metric::kMean, Metric::kIqm}) {
    Rng a(9), b(10);
    const auto plain = bootstrap_replicates(xs, m, 2000, 1.0, a);
    const auto strat = stratified_bootstrap_replicates(s, m, 2000, 1.0, b);
    EXPECT_LT(oracle::ks_two_sample(plain, strat), oracle::ks_critical_1pct(2000, 2000));
  }
  // Same stream, same draws: a single stratum reproduces the plain replicates exactly.
  Rng a(11), b(11);
  EXPECT_EQ(bootstrap_replicates(xs, Metric::kMedian, 200, 1.0, a),
            stratified_bootstrap_replicates(s, Metric::kMedian, 200, 1.0, b));
}

TEST(Bootstrap, StratifiedKeepsTaskSizes) {
  // Task a only holds 0s, task b only 1s: every stratified resample pools
  // exactly two zeros and three ones, so the mean never moves.
  const ScoreSet s{{"a", {0, 0}}, {"b", {1, 1, 1}}};
  Rng rng(12);
  for (double v : stratified_bootstrap_replicates(s, Metric::kMean, 500, 1.0, rng)) ASSERT_EQ(v, 0.6);
}

TEST(Profile, Examples) {
  const ScoreSet s{{"A", {0.2, 0.8}}, {"B", {0.6, 0.6}}};
  const std::vector<double> taus{-0.1, 0.5, 0.6, 0.9};
  const auto run = performance_profile(s, taus, ProfileMode::kRunScore);
  ASSERT_EQ(run.size(), 4u);
  EXPECT_EQ(run[0].fraction, 1.0);
  EXPECT_EQ(run[1].fraction, 0.75);
  EXPECT_EQ(run[2].fraction, 0.25);  // strictly greater
  EXPECT_EQ(run[3].fraction, 0.0);
  const auto avg = performance_profile(s, taus, ProfileMode::kAverageScore);
  EXPECT_EQ(avg[1].fraction, 0.5);
  EXPECT_THROW(performance_profile(s, std::vector<double>{0.5, 0.1}, ProfileMode::kRunScore), InputError);
  const auto grid = default_tau_grid();
  ASSERT_EQ(grid.size(), 101u);
  EXPECT_EQ(grid.front(), 0.0);
  EXPECT_EQ(grid.back(), 1.0);
  EXPECT_EQ(grid[37], 0.37);
}

TEST(ProbabilityOfImprovement, Examples) {
  const ScoreSet hi{{"t", {0.8, 0.9}}}, lo{{"t", {0.1, 0.2, 0.3}}};
  EXPECT_EQ(probability_of_improvement(hi, lo), 1.0);
  EXPECT_EQ(probability_of_improvement(lo, hi), 0.0);
  EXPECT_EQ(probability_of_improvement(hi, hi), 0.5);
  EXPECT_EQ(probability_of_improvement(ScoreSet{{"t", {1, 3}}}, ScoreSet{{"t", {2}}}), 0.5);
  EXPECT_THROW(probability_of_improvement(hi, ScoreSet{{"u", {0.1}}}), InputError);
}

// ---- properties ------------------------------------------------------------

TEST(StatsProperties, AggregateIsPermutationInvariant) {
  std::mt19937_64 g(20);
  for (int c = 0; c < 1000; ++c) {
    auto xs = random_scores(g, 1 + g() % 25, c % 2);
    for (auto& x : xs) x = x * 200.0 - 100.0 + std::ldexp(1.0, -30) * (g() % 7);
    auto ys = xs;
    std::shuffle(ys.begin(), ys.end(), g);
    for (Metric m : {Metric::kMean, Metric::kMedian, Metric::kIqm, Metric::kOg}) {
      ASSERT_EQ(aggregate(xs, m, 0.5), aggregate(ys, m, 0.5));
    }
    const double iqm = aggregate(xs, Metric::kIqm);
    ASSERT_GE(iqm, *std::min_element(xs.begin(), xs.end()));
    ASSERT_LE(iqm, *std::max_element(xs.begin(), xs.end()));
  }
}

TEST(StatsProperties, ProfileIsNonIncreasingAndMatchesOracle) {
  std::mt19937_64 g(21);
  const auto grid = default_tau_grid();
  for (int c = 0; c < 1000; ++c) {
    const ScoreSet s = random_set(g, 1 + g() % 4, c % 2);
    const auto prof = performance_profile(s, grid, ProfileMode::kRunScore);
    for (std::size_t i = 0; i < prof.size(); ++i) {
      ASSERT_EQ(prof[i].fraction, oracle::profile_fraction(s, grid[i]));
      if (i) { ASSERT_LE(prof[i].fraction, prof[i - 1].fraction); }
    }
    const auto avg = performance_profile(s, grid, ProfileMode::kAverageScore);
    for (std::size_t i = 1; i < avg.size(); ++i) ASSERT_LE(avg[i].fraction, avg[i - 1].fraction);
  }
}

TEST(StatsProperties, ImprovementIsExactAndComplementary) {
  std::mt19937_64 g(22);
  for (int c = 0; c < 1000; ++c) {
    ScoreSet x = random_set(g, 1 + g() % 4, c % 2), y;
    for (const auto& [task, xs] : x) y[task] = random_scores(g, 1 + g() % 10, c % 2);
    const double pxy = probability_of_improvement(x, y), pyx = probability_of_improvement(y, x);
    ASSERT_EQ(pxy + pyx, 1.0);
    ASSERT_TRUE(matches_exact_rational(pxy, x, y)) << pxy;
    ASSERT_TRUE(matches_exact_rational(pyx, y, x)) << pyx;
  }
}
