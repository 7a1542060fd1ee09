#pragma once

// Aggregate metrics over runs, bootstrap intervals, performance profiles and
// probability of improvement.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hierlab/rng.hpp"

namespace hierlab {

enum class Metric { kMean, kMedian, kIqm, kOg };

std::string to_string(Metric metric);
Metric parse_metric(const std::string& name);

/// iqm drops floor(n/4) scores from each end; og is mean(max(0, target - x)).
/// Throws InputError on empty or non-finite input.
double aggregate(std::span<const double> xs, Metric metric, double target = 1.0);

/// Per-task scores, one entry per run.
using ScoreSet = std::map<std::string, std::vector<double>>;

enum class CiMethod {
  kPercentile,
  /// Percentile interval at a widened level so that small samples keep their
  /// nominal coverage: alpha' = 2 Phi(-sqrt(n / (n - 1)) t_{1 - alpha/2, n - 1}).
  kExpandedPercentile,
};

struct BootstrapOptions {
  std::size_t n_resamples = 2000;
  double level = 0.95;
  CiMethod method = CiMethod::kExpandedPercentile;
  double target = 1.0;  // og only
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Metric values of n_resamples resampled datasets, in draw order.
std::vector<double> bootstrap_replicates(std::span<const double> xs, Metric metric, std::size_t n_resamples,
                                         double target, Rng& rng);
/// Each replicate resamples every task's runs independently and pools them.
std::vector<double> stratified_bootstrap_replicates(const ScoreSet& scores, Metric metric, std::size_t n_resamples,
                                                    double target, Rng& rng);

Interval bootstrap_ci(std::span<const double> xs, Metric metric, const BootstrapOptions& options, Rng& rng);
Interval stratified_bootstrap_ci(const ScoreSet& scores, Metric metric, const BootstrapOptions& options, Rng& rng);

/// Lower tail probability used for the interval endpoints, alpha/2 for the
/// plain percentile method. `n` is the (smallest per-task) sample size.
double percentile_tail(CiMethod method, double level, std::size_t n);

/// Linear-interpolation quantile of sorted data, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

/// Pools every task's runs; the metric is applied to the pooled scores.
double pooled_aggregate(const ScoreSet& scores, Metric metric, double target = 1.0);

struct ProfilePoint {
  double tau = 0.0;
  double fraction = 0.0;
};

enum class ProfileMode { kRunScore, kAverageScore };

/// run_score: fraction of all (task, run) scores > tau.
/// average_score: fraction of tasks whose mean score > tau.
std::vector<ProfilePoint> performance_profile(const ScoreSet& scores, std::span<const double> tau_grid,
                                              ProfileMode mode);
/// 0, 0.01, ..., 1.
std::vector<double> default_tau_grid();

/// Mean over tasks of P(x > y) over all run pairs, ties counted as 1/2.
/// Throws InputError when the task sets differ.
double probability_of_improvement(const ScoreSet& x, const ScoreSet& y);

}  // namespace hierlab
