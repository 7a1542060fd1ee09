#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hierlab/matrix.hpp"

namespace hierlab {

/// Goal-augmented observation. The network input is the concatenation
/// [state | achieved_goal | desired_goal].
struct GoalObservation {
  std::vector<double> state;
  std::vector<double> achieved_goal;
  std::vector<double> desired_goal;

  std::size_t flat_size() const { return state.size() + achieved_goal.size() + desired_goal.size(); }
  std::vector<double> flatten() const;
  void flatten_into(std::span<double> out) const;

  bool operator==(const GoalObservation&) const = default;
};

/// Throws InputError when the goal dimensions differ or an entry is not finite.
void validate(const GoalObservation& obs);

struct Transition {
  GoalObservation obs;
  std::vector<double> action;
  GoalObservation next_obs;
  double reward = -1.0;
  bool done = false;

  bool operator==(const Transition&) const = default;
};

struct Episode {
  std::vector<Transition> transitions;
  bool success = false;

  std::size_t length() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
};

/// Training minibatch in network layout: one row per transition.
struct Batch {
  Matrix obs;
  Matrix action;
  Matrix next_obs;
  std::vector<double> reward;
  std::vector<double> done;

  std::size_t size() const { return reward.size(); }
  void resize(std::size_t n, std::size_t obs_dim, std::size_t action_dim) {
    obs.resize(n, obs_dim);
    action.resize(n, action_dim);
    next_obs.resize(n, obs_dim);
    reward.resize(n);
    done.resize(n);
  }
  bool operator==(const Batch&) const = default;
};

/// Goal set is the closed epsilon-ball around the desired goal.
struct RewardSpec {
  double tolerance = 0.05;
};

/// 0 when ||achieved - desired||_2 <= tolerance, -1 otherwise.
double sparse_reward(std::span<const double> achieved, std::span<const double> desired, const RewardSpec& spec);

/// Sum of rewards. Throws InputError on an empty episode.
double undiscounted_return(const Episode& episode);

/// sum_i gamma^i r_i. Throws InputError when gamma is outside [0, 1].
double discounted_return(const Episode& episode, double gamma);

}  // namespace hierlab
