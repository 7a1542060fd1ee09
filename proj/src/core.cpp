#include "hierlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hierlab/error.hpp"

namespace hierlab {

std::vector<double> GoalObservation::flatten() const {
  std::vector<double> out(flat_size());
  flatten_into(out);
  return out;
}

void GoalObservation::flatten_into(std::span<double> out) const {
  if (out.size() != flat_size()) throw InputError("flatten_into: output size mismatch");
  auto it = std::copy(state.begin(), state.end(), out.begin());
  it = std::copy(achieved_goal.begin(), achieved_goal.end(), it);
  std::copy(desired_goal.begin(), desired_goal.end(), it);
}

void validate(const GoalObservation& obs) {
  if (obs.achieved_goal.size() != obs.desired_goal.size())
    throw InputError("goal observation: achieved/desired dimension mismatch");
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(obs.state) || !finite(obs.achieved_goal) || !finite(obs.desired_goal))
    throw InputError("goal observation: non-finite entry");
}

double sparse_reward(std::span<const double> achieved, std::span<const double> desired, const RewardSpec& spec) {
  if (achieved.size() != desired.size())
    throw InputError("sparse_reward: dimension mismatch (" + std::to_string(achieved.size()) + " vs " +
                     std::to_string(desired.size()) + ")");
  if (!(spec.tolerance > 0.0)) throw InputError("sparse_reward: tolerance must be > 0");
  double sq = 0.0;
  for (std::size_t i = 0; i < achieved.size(); ++i) {
    const double d = achieved[i] - desired[i];
    if (!std::isfinite(d)) throw InputError("sparse_reward: non-finite input");
    sq += d * d;
  }
  return std::sqrt(sq) <= spec.tolerance ? 0.0 : -1.0;
}

double undiscounted_return(const Episode& episode) {
  if (episode.empty()) throw InputError("undiscounted_return: empty episode");
  double total = 0.0;
  for (const auto& tr : episode.transitions) total += tr.reward;
  return total;
}

double discounted_return(const Episode& episode, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("discounted_return: gamma outside [0, 1]");
  double total = 0.0;
  double weight = 1.0;
  for (const auto& tr : episode.transitions) {
    total += weight * tr.reward;
    weight *= gamma;
  }
  return total;
}

}  // namespace hierlab
