#include "hierlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "hierlab/error.hpp"

namespace hierlab {
namespace {

void check_scores(std::span<const double> xs, const char* what) {
  if (xs.empty()) throw InputError(std::string(what) + ": empty score vector");
  for (double x : xs)
    if (!std::isfinite(x)) throw InputError(std::string(what) + ": non-finite score");
}

void check_set(const ScoreSet& s, const char* what) {
  if (s.empty()) throw InputError(std::string(what) + ": no tasks");
  for (const auto& [task, xs] : s) {
    if (xs.empty()) throw InputError(std::string(what) + ": task '" + task + "' has no runs");
    check_scores(xs, what);
  }
}

// Metric of an already sorted vector.
double aggregate_sorted(std::span<const double> s, Metric metric, double target) {
  const std::size_t n = s.size();
  switch (metric) {
    case Metric::kMean:
      return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n);
    case Metric::kMedian:
      return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
    case Metric::kIqm: {
      const std::size_t cut = n / 4;
      const auto mid = s.subspan(cut, n - 2 * cut);
      return std::accumulate(mid.begin(), mid.end(), 0.0) / static_cast<double>(mid.size());
    }
    case Metric::kOg: {
      double gap = 0.0;
      for (double x : s) gap += std::max(0.0, target - x);
      return gap / static_cast<double>(n);
    }
  }
  return 0.0;
}

Interval interval_from(std::vector<double> reps, CiMethod method, double level, std::size_t n) {
  std::sort(reps.begin(), reps.end());
  const double tail = percentile_tail(method, level, n);
  return {quantile_sorted(reps, tail), quantile_sorted(reps, 1.0 - tail)};
}

void check_options(const BootstrapOptions& o) {
  if (o.n_resamples < 100) throw InputError("bootstrap: need at least 100 resamples");
  if (!(o.level > 0.0 && o.level < 1.0)) throw InputError("bootstrap: level must lie in (0, 1)");
}

}  // namespace

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::kMean: return "mean";
    case Metric::kMedian: return "median";
    case Metric::kIqm: return "iqm";
    case Metric::kOg: return "og";
  }
  return "?";
}

Metric parse_metric(const std::string& name) {
  if (name == "mean") return Metric::kMean;
  if (name == "median") return Metric::kMedian;
  if (name == "iqm") return Metric::kIqm;
  if (name == "og") return Metric::kOg;
  throw InputError("unknown metric '" + name + "'");
}

double aggregate(std::span<const double> xs, Metric metric, double target) {
  check_scores(xs, "aggregate");
  std::vector<double> s(xs.begin(), xs.end());
  // Sorting also fixes the summation order, so every metric is exactly permutation invariant.
  std::sort(s.begin(), s.end());
  return aggregate_sorted(s, metric, target);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InputError("quantile: empty input");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return frac == 0.0 ? sorted[lo] : sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double percentile_tail(CiMethod method, double level, std::size_t n) {
  const double alpha = 1.0 - level;
  if (method == CiMethod::kPercentile || n < 2) return alpha / 2.0;
  const double df = static_cast<double>(n - 1);
  const double t = boost::math::quantile(boost::math::students_t(df), 1.0 - alpha / 2.0);
  const double z = std::sqrt(static_cast<double>(n) / df) * t;
  // Phi(-z) is the lower tail; the two-sided alpha' is twice that, halved again per side.
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

std::vector<double> bootstrap_replicates(std::span<const double> xs, Metric metric, std::size_t n_resamples,
                                         double target, Rng& rng) {
  check_scores(xs, "bootstrap");
  const std::size_t n = xs.size();
  std::vector<double> reps(n_resamples);
  std::vector<double> sample(n);
  for (std::size_t r = 0; r < n_resamples; ++r) {
    for (std::size_t i = 0; i < n; ++i) sample[i] = xs[uniform_index(rng, n)];
    std::sort(sample.begin(), sample.end());
    reps[r] = aggregate_sorted(sample, metric, target);
  }
  return reps;
}

std::vector<double> stratified_bootstrap_replicates(const ScoreSet& scores, Metric metric, std::size_t n_resamples,
                                                    double target, Rng& rng) {
  check_set(scores, "stratified bootstrap");
  std::size_t total = 0;
  for (const auto& [task, xs] : scores) total += xs.size();
  std::vector<double> reps(n_resamples);
  std::vector<double> pooled(total);
  for (std::size_t r = 0; r < n_resamples; ++r) {
    std::size_t k = 0;
    for (const auto& [task, xs] : scores)
      for (std::size_t i = 0; i < xs.size(); ++i) pooled[k++] = xs[uniform_index(rng, xs.size())];
    std::sort(pooled.begin(), pooled.end());
    reps[r] = aggregate_sorted(pooled, metric, target);
  }
  return reps;
}

Interval bootstrap_ci(std::span<const double> xs, Metric metric, const BootstrapOptions& o, Rng& rng) {
  check_options(o);
  return interval_from(bootstrap_replicates(xs, metric, o.n_resamples, o.target, rng), o.method, o.level, xs.size());
}

Interval stratified_bootstrap_ci(const ScoreSet& scores, Metric metric, const BootstrapOptions& o, Rng& rng) {
  check_options(o);
  auto reps = stratified_bootstrap_replicates(scores, metric, o.n_resamples, o.target, rng);
  std::size_t n_min = scores.begin()->second.size();
  for (const auto& [task, xs] : scores) n_min = std::min(n_min, xs.size());
  return interval_from(std::move(reps), o.method, o.level, n_min);
}

double pooled_aggregate(const ScoreSet& scores, Metric metric, double target) {
  check_set(scores, "aggregate");
  std::vector<double> pooled;
  for (const auto& [task, xs] : scores) pooled.insert(pooled.end(), xs.begin(), xs.end());
  return aggregate(pooled, metric, target);
}

std::vector<ProfilePoint> performance_profile(const ScoreSet& scores, std::span<const double> tau_grid,
                                              ProfileMode mode) {
  check_set(scores, "performance profile");
  if (!std::is_sorted(tau_grid.begin(), tau_grid.end())) throw InputError("performance profile: tau grid not sorted");
  std::vector<double> values;
  if (mode == ProfileMode::kRunScore) {
    for (const auto& [task, xs] : scores) values.insert(values.end(), xs.begin(), xs.end());
  } else {
    for (const auto& [task, xs] : scores) values.push_back(aggregate(xs, Metric::kMean));
  }
  std::sort(values.begin(), values.end());
  std::vector<ProfilePoint> out;
  out.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    const auto above = values.end() - std::upper_bound(values.begin(), values.end(), tau);
    out.push_back({tau, static_cast<double>(above) / static_cast<double>(values.size())});
  }
  return out;
}

std::vector<double> default_tau_grid() {
  std::vector<double> g(101);
  for (int i = 0; i <= 100; ++i) g[static_cast<std::size_t>(i)] = i / 100.0;
  return g;
}

double probability_of_improvement(const ScoreSet& x, const ScoreSet& y) {
  using boost::multiprecision::cpp_int;
  check_set(x, "probability of improvement");
  check_set(y, "probability of improvement");
  if (x.size() != y.size()) throw InputError("probability of improvement: task sets differ");
  // Exact rational mean over tasks of wins / pairs, ties counted in half units.
  cpp_int num = 0;
  cpp_int den = 1;
  for (const auto& [task, xs] : x) {
    const auto it = y.find(task);
    if (it == y.end()) throw InputError("probability of improvement: task '" + task + "' missing from second set");
    std::int64_t halves = 0;
    for (double a : xs)
      for (double b : it->second) halves += a > b ? 2 : (a == b ? 1 : 0);
    const cpp_int d = cpp_int(2) * xs.size() * it->second.size();
    num = num * d + cpp_int(halves) * den;
    den *= d;
  }
  den *= x.size();
  // Round to a multiple of 2^-53, ties to even, so that p(x, y) + p(y, x) == 1 exactly.
  const cpp_int scaled = num << 53;
  cpp_int q = scaled / den;
  const cpp_int r2 = (scaled % den) * 2;
  if (r2 > den || (r2 == den && (q & 1) != 0)) ++q;
  return std::ldexp(q.convert_to<double>(), -53);
}

}  // namespace hierlab
