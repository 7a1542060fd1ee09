#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hierlab/core.hpp"
#include "hierlab/mlp.hpp"
#include "hierlab/rng.hpp"

namespace hierlab {

enum class Algorithm { kSac, kTd3, kDdpg };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

struct AgentConfig {
  Algorithm algorithm = Algorithm::kSac;
  double gamma = 0.95;
  double entropy_alpha = 0.1;       // SAC, fixed (not tuned)
  double polyak_tau = 0.005;
  double lr = 1e-3;                 // actor and critic
  std::size_t batch_size = 256;
  std::vector<std::size_t> hidden = {64, 64};
  double policy_noise = 0.2;        // TD3 target smoothing
  double noise_clip = 0.5;          // TD3
  int policy_delay = 2;             // TD3
  double exploration_noise = 0.1;   // TD3 / DDPG Gaussian action noise
  double log_std_min = -20.0;       // SAC
  double log_std_max = 2.0;         // SAC

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Per-sample |TD error| of critic 1 against the bootstrapped target, plus losses.
struct TdBatchResult {
  std::vector<double> td_errors;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  bool actor_updated = false;
};

/// Affine map applied to raw observations before they reach any network.
struct ObsNormalizer {
  std::vector<double> offset;
  std::vector<double> scale;

  bool identity() const { return scale.empty(); }
  void apply(std::span<double> obs_row) const;
};

/// Common contract of the off-policy learners. update() performs one gradient
/// step on every network of the algorithm and returns the TD errors that feed
/// PER and the xi controller.
class Agent {
 public:
  virtual ~Agent() = default;

  const AgentConfig& config() const { return config_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  std::int64_t update_count() const { return updates_; }

  /// Action in [-1, 1]^action_dim. `deterministic` removes all sampling noise.
  virtual std::vector<double> act(std::span<const double> obs, bool deterministic, Rng& rng) const = 0;

  /// `is_weights` may be empty (all ones) or hold one weight per sample.
  TdBatchResult update(const Batch& batch, std::span<const double> is_weights);

  /// Named networks (online and target) in a stable order.
  virtual std::vector<std::pair<std::string, Mlp*>> networks() = 0;
  std::vector<std::pair<std::string, const Mlp*>> networks() const;

  void set_normalizer(ObsNormalizer normalizer) { normalizer_ = std::move(normalizer); }
  const ObsNormalizer& normalizer() const { return normalizer_; }

 protected:
  Agent(AgentConfig config, std::size_t obs_dim, std::size_t action_dim, Rng update_rng);

  virtual TdBatchResult do_update(const Matrix& obs, const Matrix& action, const Matrix& next_obs,
                                  std::span<const double> reward, std::span<const double> done,
                                  std::span<const double> weights) = 0;
  std::vector<double> normalized(std::span<const double> obs) const;

  AgentConfig config_;
  std::size_t obs_dim_;
  std::size_t action_dim_;
  Rng update_rng_;
  std::int64_t updates_ = 0;
  ObsNormalizer normalizer_;

 private:
  Matrix obs_n_;
  Matrix next_obs_n_;
  std::vector<double> ones_;
};

std::unique_ptr<Agent> make_agent(const AgentConfig& config, std::size_t obs_dim, std::size_t action_dim,
                                  Rng& init_rng, Rng update_rng);

/// JSON checkpoint: {"format": "hierlab-agent", "version": 1, "algorithm": ...,
/// "obs_dim", "action_dim", "networks": {name: {"sizes": [...], "params": [...]}}}.
void save_checkpoint(const Agent& agent, std::ostream& os);
/// Loads parameters into an agent of identical algorithm and shapes.
void load_checkpoint(Agent& agent, std::istream& is);

/// Loss pieces of the SAC policy objective for a fixed noise draw; exposed so
/// its analytic gradient can be checked against finite differences.
struct SacActorProbe {
  double loss = 0.0;
  std::vector<double> actor_grad;
};
SacActorProbe sac_actor_loss(Agent& sac_agent, const Matrix& obs, const Matrix& noise);

}  // namespace hierlab
