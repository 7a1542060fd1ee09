#include "hierlab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "hierlab/error.hpp"
#include "hierlab/run_io.hpp"

namespace hierlab {

void TrainConfig::validate() const {
  agent.validate();
  if (total_steps <= 0) throw ConfigError("total_steps must be > 0");
  if (warmup_steps < 0 || warmup_steps >= total_steps) throw ConfigError("warmup_steps must lie in [0, total_steps)");
  if (eval_points < 1) throw ConfigError("eval_points must be >= 1");
  if (eval_points > total_steps) throw ConfigError("eval_points must not exceed total_steps");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (update_every < 1 || gradient_steps < 1) throw ConfigError("update_every and gradient_steps must be >= 1");
  if (ser_capacity == 0 || hier_capacity == 0) throw ConfigError("buffer capacities must be > 0");
  if (her_spec.k_relabel < 1) throw ConfigError("her k_relabel must be >= 1");
  if (!(per_params.alpha >= 0.0 && per_params.alpha <= 1.0)) throw ConfigError("per alpha must lie in [0, 1]");
  if (!(per_params.beta0 >= 0.0 && per_params.beta0 <= 1.0)) throw ConfigError("per beta0 must lie in [0, 1]");
  if (!(per_params.eps > 0.0)) throw ConfigError("per eps must be > 0");
  if (!(lambda_top_fraction >= 0.0 && lambda_top_fraction <= 1.0))
    throw ConfigError("lambda_top_fraction must lie in [0, 1]");
  if (!(xi.fix_value >= 0.0 && xi.fix_value <= 1.0)) throw ConfigError("xi fix_value must lie in [0, 1]");
  if (!(xi.alpha_p >= 0.0 && xi.alpha_p <= 1.0)) throw ConfigError("xi alpha_p must lie in [0, 1]");
}

std::vector<std::int64_t> eval_schedule(std::int64_t total_steps, int points) {
  std::vector<std::int64_t> ticks;
  ticks.reserve(static_cast<std::size_t>(points));
  for (int k = 1; k <= points; ++k)
    ticks.push_back(static_cast<std::int64_t>(std::llround(static_cast<double>(k) * total_steps / points)));
  return ticks;
}

EvalResult evaluate(const Agent& agent, Env& env, int n_episodes, Rng& rng) {
  if (n_episodes < 1) throw InputError("evaluate: n_episodes must be >= 1");
  int successes = 0;
  double return_sum = 0.0;
  for (int e = 0; e < n_episodes; ++e) {
    GoalObservation obs = env.reset(1.0, rng);
    if (env.last_reset_c() != 1.0) throw std::logic_error("evaluate: environment was not reset with c = 1");
    double ret = 0.0;
    bool success = false;
    while (true) {
      const auto action = agent.act(obs.flatten(), true, rng);
      EnvStepResult r = env.step(action);
      ret += r.reward;
      if (r.done) {
        success = r.is_success;
        break;
      }
      obs = std::move(r.next_obs);
    }
    successes += success ? 1 : 0;
    return_sum += ret;
  }
  return {static_cast<double>(successes) / n_episodes, return_sum / n_episodes};
}

BestLast best_and_last(const RunRecord& record) {
  if (record.series.empty()) throw InputError("best_and_last: empty evaluation series");
  BestLast out;
  out.best_success = record.series.front().success_rate;
  for (const auto& p : record.series) out.best_success = std::max(out.best_success, p.success_rate);
  out.last_return = record.series.back().mean_return;
  return out;
}

namespace {

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// One run of the training loop; owns every piece of mutable state.
class Run {
 public:
  Run(const TrainConfig& cfg, const TrainHooks& hooks)
      : cfg_(cfg),
        hooks_(hooks),
        env_(make_env(cfg.task)),
        eval_env_(env_->clone()),
        layout_(env_->layout()),
        ser_(cfg.ser_capacity, layout_),
        hier_(cfg.hier_capacity, layout_),
        per_index_(cfg.per ? cfg.ser_capacity : 1, cfg.per_params),
        lambda_(resolve_lambda(cfg, *env_)),
        xi_(cfg.xi),
        c_ctl_(cfg.c),
        env_rng_(make_stream(cfg.seed, Stream::kEnv)),
        explore_rng_(make_stream(cfg.seed, Stream::kExplore)),
        sample_rng_(make_stream(cfg.seed, Stream::kSample)),
        her_rng_(make_stream(cfg.seed, Stream::kHer)),
        eval_rng_(make_stream(cfg.seed, Stream::kEval)) {
    AgentConfig ac = cfg.agent;
    if (cfg.task_gamma) ac.gamma = env_->default_gamma();
    Rng init_rng = make_stream(cfg.seed, Stream::kAgentInit);
    agent_ = make_agent(ac, layout_.obs_dim(), layout_.action_dim, init_rng,
                        make_stream(cfg.seed, Stream::kAgentUpdate));
    agent_->set_normalizer(env_->normalizer());
  }

  RunRecord execute() {
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.seed = cfg_.seed;
    rec.fingerprint = config_fingerprint(cfg_);
    rec.task = cfg_.task;
    rec.algorithm = to_string(cfg_.agent.algorithm);
    rec.variant = cfg_.variant;

    const auto ticks = eval_schedule(cfg_.total_steps, cfg_.eval_points);
    std::size_t next_tick = 0;
    double c = cfg_.e2h ? c_ctl_.current() : 1.0;
    GoalObservation obs = env_->reset(c, env_rng_);
    Episode episode;
    std::int64_t j = 1;
    double last_lambda = lambda_.current();

    for (std::int64_t t = 1; t <= cfg_.total_steps; ++t) {
      std::vector<double> action;
      if (t <= cfg_.warmup_steps) {
        action.resize(layout_.action_dim);
        for (double& a : action) a = 2.0 * uniform01(explore_rng_) - 1.0;
      } else {
        action = agent_->act(obs.flatten(), false, explore_rng_);
      }
      EnvStepResult r = env_->step(action);
      episode.transitions.push_back({obs, action, r.next_obs, r.reward, r.is_success});
      obs = std::move(r.next_obs);

      if (r.done) {
        episode.success = r.is_success;
        finish_episode(episode, t, j, last_lambda, rec);
        if (cfg_.e2h) c = c_ctl_.next(t, cfg_.total_steps, j);
        ++j;
        episode.transitions.clear();
        obs = env_->reset(c, env_rng_);
      }

      if (t > cfg_.warmup_steps && t % cfg_.update_every == 0 && !ser_.empty())
        for (int g = 0; g < cfg_.gradient_steps; ++g) update(t);

      while (next_tick < ticks.size() && ticks[next_tick] == t) {
        EvalResult ev = evaluate(*agent_, *eval_env_, cfg_.eval_episodes, eval_rng_);
        if (cfg_.e2h && cfg_.c.mode == CMode::kControlAdaptive) c_ctl_.record_eval_success(ev.success_rate);
        EvalPoint p;
        p.t = t;
        p.success_rate = ev.success_rate;
        p.mean_return = ev.mean_return;
        p.c = cfg_.e2h ? c_ctl_.current() : 1.0;
        p.lambda = last_lambda;
        p.xi = cfg_.hier ? current_xi() : 0.0;
        p.hier_size = hier_.size();
        p.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rec.series.push_back(p);
        ++next_tick;
      }
    }
    rec.episodes = j - 1;
    rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (rec.series.size() != static_cast<std::size_t>(cfg_.eval_points))
      throw std::logic_error("train_run: evaluation series length differs from eval_points");
    return rec;
  }

 private:
  static LambdaParams resolve_lambda(const TrainConfig& cfg, const Env& env) {
    LambdaParams p = cfg.lambda;
    const double horizon = env.horizon();
    p.total_steps = cfg.total_steps;
    p.r_min = -horizon;
    p.lambda_top = -cfg.lambda_top_fraction * horizon;
    if (!std::isfinite(p.lambda_0)) p.lambda_0 = -horizon;
    return p;
  }

  double current_xi() const { return cfg_.xi.mode == XiMode::kFix ? cfg_.xi.fix_value : xi_.current(); }

  void push_ser(const Transition& tr) {
    const std::size_t slot = ser_.push(tr);
    if (cfg_.per) per_index_.on_insert(slot);
  }

  void finish_episode(const Episode& episode, std::int64_t t, std::int64_t j, double& last_lambda, RunRecord& rec) {
    for (const auto& tr : episode.transitions) push_ser(tr);
    if (cfg_.her)
      for (const auto& tr : her_relabel(episode, cfg_.her_spec, env_->reward_spec(), her_rng_)) push_ser(tr);

    double lam = 0.0;
    bool stored = false;
    if (cfg_.hier) {
      const double ret = undiscounted_return(episode);
      lam = lambda_.next(t, j);
      last_lambda = lam;
      stored = hier_store(hier_, episode, lam);
      if (stored && !(lam < ret)) throw std::logic_error("train_run: highlight store violated lambda < R");
      if (stored) ++rec.hier_episodes;
      lambda_.record_return(ret);
    }
    if (cfg_.e2h) c_ctl_.record_train_outcome(episode.success);
    if (hooks_.on_episode) hooks_.on_episode(episode, lam, stored);
  }

  void update(std::int64_t t) {
    const std::size_t n = cfg_.agent.batch_size;
    const BatchSplit split = cfg_.hier ? split_batch(n, current_xi(), hier_.size()) : BatchSplit{n, 0};
    batch_.resize(n, layout_.obs_dim(), layout_.action_dim);
    weights_.assign(n, 1.0);

    std::vector<std::size_t> ser_slots;
    if (split.n_ser > 0) {
      if (cfg_.per) {
        const double frac = std::min(1.0, static_cast<double>(t) / static_cast<double>(cfg_.total_steps));
        const double beta = cfg_.per_params.beta0 + (1.0 - cfg_.per_params.beta0) * frac;
        PerBatch pb = per_sample(ser_, per_index_, split.n_ser, beta, sample_rng_);
        std::copy(pb.is_weights.begin(), pb.is_weights.end(), weights_.begin());
        ser_slots = std::move(pb.slots);
      } else {
        ser_slots = uniform_sample_slots(ser_, split.n_ser, sample_rng_);
      }
      ser_.gather(ser_slots, batch_, 0);
    }
    if (split.n_hier > 0) {
      // Uniform with replacement, also when fewer than n_hier transitions are stored.
      const auto hier_slots = uniform_sample_slots(hier_, split.n_hier, sample_rng_);
      hier_.gather(hier_slots, batch_, split.n_ser);
    }
    if (hooks_.on_batch) hooks_.on_batch(agent_->update_count(), batch_);

    const TdBatchResult res = agent_->update(batch_, cfg_.per ? std::span<const double>(weights_) : std::span<const double>{});
    const std::span<const double> td(res.td_errors);
    if (cfg_.per && split.n_ser > 0) per_update(per_index_, ser_, ser_slots, td.first(split.n_ser));
    if (cfg_.hier && cfg_.xi.mode == XiMode::kPrioritized && split.n_ser > 0 && split.n_hier > 0)
      xi_.next(mean_of(td.subspan(split.n_ser)), mean_of(td.first(split.n_ser)));
  }

  const TrainConfig& cfg_;
  const TrainHooks& hooks_;
  std::unique_ptr<Env> env_;
  std::unique_ptr<Env> eval_env_;
  TransitionLayout layout_;
  RingBuffer ser_;
  RingBuffer hier_;
  PriorityIndex per_index_;
  LambdaController lambda_;
  XiController xi_;
  CController c_ctl_;
  Rng env_rng_;
  Rng explore_rng_;
  Rng sample_rng_;
  Rng her_rng_;
  Rng eval_rng_;
  std::unique_ptr<Agent> agent_;
  Batch batch_;
  std::vector<double> weights_;
};

}  // namespace

RunRecord train_run(const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  Run run(config, hooks);
  return run.execute();
}

}  // namespace hierlab
