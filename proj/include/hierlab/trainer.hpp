#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hierlab/agents.hpp"
#include "hierlab/buffers.hpp"
#include "hierlab/e2h_ise.hpp"
#include "hierlab/envs.hpp"
#include "hierlab/hier_ctl.hpp"

namespace hierlab {

struct TrainConfig {
  std::string task = "point_reach";
  std::string variant = "Baseline [HER]";
  AgentConfig agent;
  /// Use the task's discount instead of agent.gamma.
  bool task_gamma = true;

  bool her = true;
  bool per = false;
  bool hier = false;
  bool e2h = false;

  HerSpec her_spec;
  PerParams per_params;
  /// r_min, lambda_top and total_steps are filled in from the task horizon
  /// and total_steps at run start; lambda_0 too when it is not finite.
  LambdaParams lambda = [] {
    LambdaParams p;
    p.lambda_0 = std::numeric_limits<double>::quiet_NaN();
    return p;
  }();
  double lambda_top_fraction = 0.05;  // lambda_top = -fraction * T
  XiParams xi;
  CParams c;

  std::size_t ser_capacity = 1'000'000;
  std::size_t hier_capacity = 1'000'000;

  std::int64_t total_steps = 30'000;
  int eval_points = 50;
  int eval_episodes = 100;
  std::int64_t warmup_steps = 1'000;
  int update_every = 1;
  int gradient_steps = 1;
  std::uint64_t seed = 0;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

struct EvalPoint {
  std::int64_t t = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
  double c = 1.0;
  double lambda = 0.0;
  double xi = 0.0;
  std::size_t hier_size = 0;
  double wall_clock_s = 0.0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::string task;
  std::string algorithm;
  std::string variant;
  std::vector<EvalPoint> series;
  std::int64_t episodes = 0;
  std::int64_t hier_episodes = 0;
  double wall_clock_s = 0.0;
};

struct EvalResult {
  double success_rate = 0.0;
  double mean_return = 0.0;
};

/// Deterministic-policy rollouts from c = 1 resets. Throws std::logic_error if
/// the environment reports any other reset scale.
EvalResult evaluate(const Agent& agent, Env& env, int n_episodes, Rng& rng);

struct BestLast {
  double best_success = 0.0;
  double last_return = 0.0;
};

/// Max success rate over the series and mean return at the final point.
BestLast best_and_last(const RunRecord& record);

/// Optional instrumentation of a run.
struct TrainHooks {
  /// Called with every assembled update batch before the agent sees it.
  std::function<void(std::int64_t update_index, const Batch& batch)> on_batch;
  /// Called after every finished training episode with the lambda it was tested against.
  std::function<void(const Episode& episode, double lambda, bool stored)> on_episode;
};

RunRecord train_run(const TrainConfig& config, const TrainHooks& hooks = {});

/// Steps at which evaluation happens: round(k * total / points), k = 1..points.
std::vector<std::int64_t> eval_schedule(std::int64_t total_steps, int points);

}  // namespace hierlab
