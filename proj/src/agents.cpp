#include "hierlab/agents.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>

#include "json.hpp"

#include "hierlab/error.hpp"

namespace hierlab {
namespace {

using nlohmann::json;

void concat_cols(const Matrix& a, const Matrix& b, Matrix& out) {
  out.resize(a.rows, a.cols + b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols));
  }
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::runtime_error(std::string("agent: non-finite value in ") + what);
}

// log(1 - tanh(u)^2) computed without cancellation.
double log1m_tanh_sq(double u) {
  const double z = -2.0 * u;
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return 2.0 * (std::numbers::ln2 - u - softplus);
}

/// Critic with its own target copy and optimiser.
struct Critic {
  Mlp net;
  Mlp target;
  Adam opt;
  std::vector<double> grad;
  MlpWorkspace ws;
  MlpWorkspace target_ws;

  Critic(std::size_t in, const std::vector<std::size_t>& hidden, const AdamParams& adam, Rng& rng) {
    std::vector<std::size_t> sizes{in};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    net = Mlp::make(sizes, rng);
    target = net;
    opt = Adam(net.num_params(), adam);
    grad.assign(net.num_params(), 0.0);
  }
};

Mlp make_actor_net(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out, Rng& rng) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return Mlp::make(sizes, rng);
}

AdamParams adam_for(const AgentConfig& c) {
  AdamParams p;
  p.lr = c.lr;
  return p;
}

/// Shared twin/single-critic regression step: loss = mean_i w_i sum_c (q_c - y)^2.
/// Returns |q_1 - y| per sample, evaluated before the step.
double critic_step(std::span<Critic*> critics, const Matrix& input, std::span<const double> y,
                   std::span<const double> w, std::vector<double>& td_out) {
  const std::size_t batch = input.rows;
  const double inv_b = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  Matrix g(batch, 1);
  for (std::size_t c = 0; c < critics.size(); ++c) {
    Critic& cr = *critics[c];
    const Matrix& q = cr.net.forward(input, cr.ws);
    for (std::size_t i = 0; i < batch; ++i) {
      const double diff = q.data[i] - y[i];
      if (c == 0) td_out[i] = std::abs(diff);
      loss += w[i] * diff * diff * inv_b;
      g.data[i] = 2.0 * w[i] * diff * inv_b;
    }
    std::fill(cr.grad.begin(), cr.grad.end(), 0.0);
    cr.net.backward(cr.ws, g, cr.grad, nullptr);
    cr.opt.step(cr.net.params(), cr.grad);
    check_finite(cr.net.params(), "critic parameters");
  }
  return loss;
}

// ---------------------------------------------------------------------------

class SacAgent final : public Agent {
 public:
  SacAgent(const AgentConfig& cfg, std::size_t obs_dim, std::size_t act_dim, Rng& init_rng, Rng update_rng)
      : Agent(cfg, obs_dim, act_dim, std::move(update_rng)),
        actor_(make_actor_net(obs_dim, cfg.hidden, 2 * act_dim, init_rng)),
        q1_(obs_dim + act_dim, cfg.hidden, adam_for(cfg), init_rng),
        q2_(obs_dim + act_dim, cfg.hidden, adam_for(cfg), init_rng),
        actor_opt_(actor_.num_params(), adam_for(cfg)),
        actor_grad_(actor_.num_params(), 0.0) {}

  std::vector<double> act(std::span<const double> obs, bool deterministic, Rng& rng) const override {
    const auto out = actor_.forward(normalized(obs));
    std::vector<double> a(action_dim_);
    for (std::size_t d = 0; d < action_dim_; ++d) {
      double u = out[d];
      if (!deterministic) {
        const double log_std = std::clamp(out[action_dim_ + d], config_.log_std_min, config_.log_std_max);
        u += std::exp(log_std) * standard_normal(rng);
      }
      a[d] = std::tanh(u);
    }
    return a;
  }

  std::vector<std::pair<std::string, Mlp*>> networks() override {
    return {{"actor", &actor_}, {"q1", &q1_.net}, {"q2", &q2_.net}, {"q1_target", &q1_.target},
            {"q2_target", &q2_.target}};
  }

  /// Policy objective mean_i(alpha logp_i - min_c Q_c(s_i, a_i)) for fixed noise.
  /// Accumulates dLoss/dActorParams into actor_grad_ when `want_grad`.
  double actor_objective(const Matrix& obs, const Matrix& noise, bool want_grad) {
    const std::size_t batch = obs.rows;
    const std::size_t ad = action_dim_;
    const double alpha = config_.entropy_alpha;
    const double inv_b = 1.0 / static_cast<double>(batch);
    const Matrix& raw = actor_.forward(obs, actor_ws_);

    pi_action_.resize(batch, ad);
    Matrix sigma(batch, ad);
    std::vector<char> clamped(batch * ad, 0);
    std::vector<double> logp(batch, 0.0);
    for (std::size_t i = 0; i < batch; ++i) {
      for (std::size_t d = 0; d < ad; ++d) {
        const double raw_ls = raw(i, ad + d);
        const double log_std = std::clamp(raw_ls, config_.log_std_min, config_.log_std_max);
        clamped[i * ad + d] = raw_ls != log_std;
        const double s = std::exp(log_std);
        const double eps = noise(i, d);
        const double u = raw(i, d) + s * eps;
        sigma(i, d) = s;
        pi_action_(i, d) = std::tanh(u);
        logp[i] += -0.5 * eps * eps - log_std - 0.5 * std::log(2.0 * std::numbers::pi) - log1m_tanh_sq(u);
      }
    }
    concat_cols(obs, pi_action_, pi_input_);
    const Matrix& qa = q1_.net.forward(pi_input_, q1_.ws);
    const Matrix& qb = q2_.net.forward(pi_input_, q2_.ws);
    double loss = 0.0;
    Matrix ga(batch, 1), gb(batch, 1);
    for (std::size_t i = 0; i < batch; ++i) {
      const bool first = qa.data[i] <= qb.data[i];
      loss += (alpha * logp[i] - (first ? qa.data[i] : qb.data[i])) * inv_b;
      ga.data[i] = first ? -inv_b : 0.0;
      gb.data[i] = first ? 0.0 : -inv_b;
    }
    if (!want_grad) return loss;

    Matrix dxa, dxb;
    q1_.net.backward(q1_.ws, ga, {}, &dxa);
    q2_.net.backward(q2_.ws, gb, {}, &dxb);
    Matrix graw(batch, 2 * ad);
    for (std::size_t i = 0; i < batch; ++i) {
      for (std::size_t d = 0; d < ad; ++d) {
        const double a = pi_action_(i, d);
        const double dl_da = dxa(i, obs_dim_ + d) + dxb(i, obs_dim_ + d);
        const double dl_du = dl_da * (1.0 - a * a) + alpha * inv_b * 2.0 * a;
        graw(i, d) = dl_du;
        graw(i, ad + d) = clamped[i * ad + d] ? 0.0 : dl_du * sigma(i, d) * noise(i, d) - alpha * inv_b;
      }
    }
    actor_.backward(actor_ws_, graw, actor_grad_, nullptr);
    return loss;
  }

  std::vector<double>& actor_grad() { return actor_grad_; }
  Mlp& actor() { return actor_; }

 protected:
  TdBatchResult do_update(const Matrix& obs, const Matrix& action, const Matrix& next_obs,
                          std::span<const double> reward, std::span<const double> done,
                          std::span<const double> w) override {
    const std::size_t batch = obs.rows;
    const std::size_t ad = action_dim_;
    const double alpha = config_.entropy_alpha;

    // Bootstrapped target from the current policy and the target critics.
    const Matrix& raw_next = actor_.forward(next_obs, actor_ws_);
    Matrix next_action(batch, ad);
    std::vector<double> next_logp(batch, 0.0);
    for (std::size_t i = 0; i < batch; ++i) {
      for (std::size_t d = 0; d < ad; ++d) {
        const double log_std = std::clamp(raw_next(i, ad + d), config_.log_std_min, config_.log_std_max);
        const double eps = standard_normal(update_rng_);
        const double u = raw_next(i, d) + std::exp(log_std) * eps;
        next_action(i, d) = std::tanh(u);
        next_logp[i] += -0.5 * eps * eps - log_std - 0.5 * std::log(2.0 * std::numbers::pi) - log1m_tanh_sq(u);
      }
    }
    concat_cols(next_obs, next_action, next_input_);
    const Matrix& t1 = q1_.target.forward(next_input_, q1_.target_ws);
    const Matrix& t2 = q2_.target.forward(next_input_, q2_.target_ws);
    std::vector<double> y(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      const double q_next = std::min(t1.data[i], t2.data[i]) - alpha * next_logp[i];
      y[i] = reward[i] + config_.gamma * (1.0 - done[i]) * q_next;
    }

    TdBatchResult result;
    result.td_errors.resize(batch);
    concat_cols(obs, action, input_);
    Critic* critics[] = {&q1_, &q2_};
    result.critic_loss = critic_step(critics, input_, y, w, result.td_errors);

    Matrix noise(batch, ad);
    for (double& v : noise.data) v = standard_normal(update_rng_);
    std::fill(actor_grad_.begin(), actor_grad_.end(), 0.0);
    result.actor_loss = actor_objective(obs, noise, true);
    actor_opt_.step(actor_.params(), actor_grad_);
    check_finite(actor_.params(), "actor parameters");
    result.actor_updated = true;

    polyak(q1_.target.params(), q1_.net.params(), config_.polyak_tau);
    polyak(q2_.target.params(), q2_.net.params(), config_.polyak_tau);
    return result;
  }

 private:
  Mlp actor_;
  Critic q1_;
  Critic q2_;
  Adam actor_opt_;
  std::vector<double> actor_grad_;
  MlpWorkspace actor_ws_;
  Matrix input_, next_input_, pi_input_, pi_action_;
};

// ---------------------------------------------------------------------------

/// Deterministic-policy learners. TD3 uses twin critics, target smoothing and
/// delayed actor/target updates; DDPG uses one critic and updates every step.
class DeterministicAgent final : public Agent {
 public:
  DeterministicAgent(const AgentConfig& cfg, std::size_t obs_dim, std::size_t act_dim, Rng& init_rng,
                     Rng update_rng)
      : Agent(cfg, obs_dim, act_dim, std::move(update_rng)),
        twin_(cfg.algorithm == Algorithm::kTd3),
        actor_(make_actor_net(obs_dim, cfg.hidden, act_dim, init_rng)),
        actor_target_(actor_),
        q1_(obs_dim + act_dim, cfg.hidden, adam_for(cfg), init_rng),
        actor_opt_(actor_.num_params(), adam_for(cfg)),
        actor_grad_(actor_.num_params(), 0.0) {
    if (twin_) q2_.emplace(obs_dim + act_dim, cfg.hidden, adam_for(cfg), init_rng);
  }

  std::vector<double> act(std::span<const double> obs, bool deterministic, Rng& rng) const override {
    const auto out = actor_.forward(normalized(obs));
    std::vector<double> a(action_dim_);
    for (std::size_t d = 0; d < action_dim_; ++d) {
      a[d] = std::tanh(out[d]);
      if (!deterministic) a[d] = std::clamp(a[d] + config_.exploration_noise * standard_normal(rng), -1.0, 1.0);
    }
    return a;
  }

  std::vector<std::pair<std::string, Mlp*>> networks() override {
    std::vector<std::pair<std::string, Mlp*>> out{{"actor", &actor_}, {"actor_target", &actor_target_}, {"q1", &q1_.net},
                                                  {"q1_target", &q1_.target}};
    if (q2_) {
      out.emplace_back("q2", &q2_->net);
      out.emplace_back("q2_target", &q2_->target);
    }
    return out;
  }

 protected:
  TdBatchResult do_update(const Matrix& obs, const Matrix& action, const Matrix& next_obs,
                          std::span<const double> reward, std::span<const double> done,
                          std::span<const double> w) override {
    const std::size_t batch = obs.rows;
    const std::size_t ad = action_dim_;

    const Matrix& raw_next = actor_target_.forward(next_obs, actor_target_ws_);
    Matrix next_action(batch, ad);
    for (std::size_t i = 0; i < batch; ++i) {
      for (std::size_t d = 0; d < ad; ++d) {
        double a = std::tanh(raw_next(i, d));
        if (twin_) {
          const double eps = std::clamp(config_.policy_noise * standard_normal(update_rng_), -config_.noise_clip,
                                        config_.noise_clip);
          a = std::clamp(a + eps, -1.0, 1.0);
        }
        next_action(i, d) = a;
      }
    }
    concat_cols(next_obs, next_action, next_input_);
    const Matrix& t1 = q1_.target.forward(next_input_, q1_.target_ws);
    std::vector<double> y(batch);
    for (std::size_t i = 0; i < batch; ++i) y[i] = t1.data[i];
    if (q2_) {
      const Matrix& t2 = q2_->target.forward(next_input_, q2_->target_ws);
      for (std::size_t i = 0; i < batch; ++i) y[i] = std::min(y[i], t2.data[i]);
    }
    for (std::size_t i = 0; i < batch; ++i) y[i] = reward[i] + config_.gamma * (1.0 - done[i]) * y[i];

    TdBatchResult result;
    result.td_errors.resize(batch);
    concat_cols(obs, action, input_);
    std::vector<Critic*> critics{&q1_};
    if (q2_) critics.push_back(&*q2_);
    result.critic_loss = critic_step(critics, input_, y, w, result.td_errors);

    const bool actor_tick = !twin_ || (updates_ % std::max(1, config_.policy_delay)) == 0;
    if (actor_tick) {
      const double inv_b = 1.0 / static_cast<double>(batch);
      const Matrix& raw = actor_.forward(obs, actor_ws_);
      Matrix pi_action(batch, ad);
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t d = 0; d < ad; ++d) pi_action(i, d) = std::tanh(raw(i, d));
      concat_cols(obs, pi_action, pi_input_);
      const Matrix& q = q1_.net.forward(pi_input_, q1_.ws);
      Matrix g(batch, 1, -inv_b);
      double loss = 0.0;
      for (std::size_t i = 0; i < batch; ++i) loss -= q.data[i] * inv_b;
      Matrix dx;
      q1_.net.backward(q1_.ws, g, {}, &dx);
      Matrix graw(batch, ad);
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t d = 0; d < ad; ++d) graw(i, d) = dx(i, obs_dim_ + d) * (1.0 - pi_action(i, d) * pi_action(i, d));
      std::fill(actor_grad_.begin(), actor_grad_.end(), 0.0);
      actor_.backward(actor_ws_, graw, actor_grad_, nullptr);
      actor_opt_.step(actor_.params(), actor_grad_);
      check_finite(actor_.params(), "actor parameters");
      result.actor_loss = loss;
      result.actor_updated = true;

      polyak(actor_target_.params(), actor_.params(), config_.polyak_tau);
      polyak(q1_.target.params(), q1_.net.params(), config_.polyak_tau);
      if (q2_) polyak(q2_->target.params(), q2_->net.params(), config_.polyak_tau);
    }
    return result;
  }

 private:
  bool twin_;
  Mlp actor_;
  Mlp actor_target_;
  Critic q1_;
  std::optional<Critic> q2_;
  Adam actor_opt_;
  std::vector<double> actor_grad_;
  MlpWorkspace actor_ws_;
  MlpWorkspace actor_target_ws_;
  Matrix input_, next_input_, pi_input_;
};

}  // namespace

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kSac:
      return "sac";
    case Algorithm::kTd3:
      return "td3";
    case Algorithm::kDdpg:
      return "ddpg";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "sac") return Algorithm::kSac;
  if (name == "td3") return Algorithm::kTd3;
  if (name == "ddpg") return Algorithm::kDdpg;
  throw ConfigError("unknown algorithm '" + name + "' (expected sac, td3 or ddpg)");
}

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("agent: gamma must lie in [0, 1]");
  if (!(polyak_tau > 0.0 && polyak_tau <= 1.0)) throw ConfigError("agent: polyak tau must lie in (0, 1]");
  if (batch_size == 0) throw ConfigError("agent: batch size must be > 0");
  if (!(lr >= 0.0)) throw ConfigError("agent: lr must be >= 0");
  if (!(entropy_alpha >= 0.0)) throw ConfigError("agent: entropy alpha must be >= 0");
  if (hidden.empty()) throw ConfigError("agent: need at least one hidden layer");
  if (policy_delay < 1) throw ConfigError("agent: policy delay must be >= 1");
  if (!(log_std_min < log_std_max)) throw ConfigError("agent: log_std_min must be < log_std_max");
}

void ObsNormalizer::apply(std::span<double> obs_row) const {
  if (identity()) return;
  for (std::size_t i = 0; i < obs_row.size(); ++i) obs_row[i] = (obs_row[i] - offset[i]) * scale[i];
}

Agent::Agent(AgentConfig config, std::size_t obs_dim, std::size_t action_dim, Rng update_rng)
    : config_(std::move(config)), obs_dim_(obs_dim), action_dim_(action_dim), update_rng_(std::move(update_rng)) {
  config_.validate();
}

std::vector<double> Agent::normalized(std::span<const double> obs) const {
  if (obs.size() != obs_dim_) throw InputError("agent: observation size mismatch");
  std::vector<double> out(obs.begin(), obs.end());
  normalizer_.apply(out);
  return out;
}

std::vector<std::pair<std::string, const Mlp*>> Agent::networks() const {
  std::vector<std::pair<std::string, const Mlp*>> out;
  for (auto& [name, net] : const_cast<Agent*>(this)->networks()) out.emplace_back(name, net);
  return out;
}

TdBatchResult Agent::update(const Batch& batch, std::span<const double> is_weights) {
  const std::size_t n = batch.size();
  if (n == 0) throw InputError("agent update: empty batch");
  if (batch.obs.cols != obs_dim_ || batch.next_obs.cols != obs_dim_ || batch.action.cols != action_dim_ ||
      batch.obs.rows != n || batch.action.rows != n || batch.next_obs.rows != n || batch.done.size() != n)
    throw InputError("agent update: batch shape mismatch");
  if (!is_weights.empty() && is_weights.size() != n) throw InputError("agent update: is_weights length mismatch");
  if (is_weights.empty()) {
    ones_.assign(n, 1.0);
    is_weights = ones_;
  }
  const Matrix* obs = &batch.obs;
  const Matrix* next_obs = &batch.next_obs;
  if (!normalizer_.identity()) {
    obs_n_ = batch.obs;
    next_obs_n_ = batch.next_obs;
    for (std::size_t r = 0; r < n; ++r) {
      normalizer_.apply(obs_n_.row(r));
      normalizer_.apply(next_obs_n_.row(r));
    }
    obs = &obs_n_;
    next_obs = &next_obs_n_;
  }
  auto result = do_update(*obs, batch.action, *next_obs, batch.reward, batch.done, is_weights);
  ++updates_;
  return result;
}

std::unique_ptr<Agent> make_agent(const AgentConfig& config, std::size_t obs_dim, std::size_t action_dim,
                                  Rng& init_rng, Rng update_rng) {
  config.validate();
  if (obs_dim == 0 || action_dim == 0) throw ConfigError("agent: dimensions must be > 0");
  if (config.algorithm == Algorithm::kSac)
    return std::make_unique<SacAgent>(config, obs_dim, action_dim, init_rng, std::move(update_rng));
  return std::make_unique<DeterministicAgent>(config, obs_dim, action_dim, init_rng, std::move(update_rng));
}

void save_checkpoint(const Agent& agent, std::ostream& os) {
  json j;
  j["format"] = "hierlab-agent";
  j["version"] = 1;
  j["algorithm"] = to_string(agent.config().algorithm);
  j["obs_dim"] = agent.obs_dim();
  j["action_dim"] = agent.action_dim();
  j["update_count"] = agent.update_count();
  json nets = json::object();
  for (const auto& [name, net] : agent.networks()) {
    nets[name] = {{"sizes", net->sizes()},
                  {"params", std::vector<double>(net->params().begin(), net->params().end())}};
  }
  j["networks"] = std::move(nets);
  os << j.dump() << '\n';
}

void load_checkpoint(Agent& agent, std::istream& is) {
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "hierlab-agent" || j.value("version", 0) != 1)
    throw InputError("checkpoint: unsupported format or version");
  if (j.at("algorithm").get<std::string>() != to_string(agent.config().algorithm))
    throw InputError("checkpoint: algorithm mismatch");
  for (auto& [name, net] : agent.networks()) {
    const auto& entry = j.at("networks").at(name);
    if (entry.at("sizes").get<std::vector<std::size_t>>() != net->sizes())
      throw InputError("checkpoint: shape mismatch for network " + name);
    const auto params = entry.at("params").get<std::vector<double>>();
    if (params.size() != net->num_params()) throw InputError("checkpoint: parameter count mismatch for " + name);
    std::copy(params.begin(), params.end(), net->params().begin());
  }
}

SacActorProbe sac_actor_loss(Agent& agent, const Matrix& obs, const Matrix& noise) {
  auto* sac = dynamic_cast<SacAgent*>(&agent);
  if (sac == nullptr) throw InputError("sac_actor_loss: agent is not SAC");
  SacActorProbe probe;
  std::fill(sac->actor_grad().begin(), sac->actor_grad().end(), 0.0);
  probe.loss = sac->actor_objective(obs, noise, true);
  probe.actor_grad = sac->actor_grad();
  return probe;
}

}  // namespace hierlab
