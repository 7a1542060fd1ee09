#include "hierlab/hier_ctl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hierlab/error.hpp"

namespace hierlab {

double saturating_profile(std::int64_t t, std::int64_t total, double z_sat) {
  if (total <= 0) throw ConfigError("predefined profile: total steps must be > 0");
  if (!(z_sat > 0.0 && z_sat <= 1.0)) throw ConfigError("predefined profile: z_sat must lie in (0, 1]");
  const double p = static_cast<double>(t) / (static_cast<double>(total) * z_sat);
  return std::clamp(p, 0.0, 1.0);
}

LambdaController::LambdaController(LambdaParams params) : params_(params) {
  switch (params_.mode) {
    case LambdaMode::kFix:
      current_ = params_.fix_value;
      break;
    case LambdaMode::kPredefined:
      if (params_.total_steps <= 0) throw ConfigError("lambda predefined: total_steps must be > 0");
      if (!(params_.z_sat > 0.0 && params_.z_sat <= 1.0)) throw ConfigError("lambda predefined: z_sat must lie in (0, 1]");
      if (params_.lambda_top < params_.r_min) throw ConfigError("lambda predefined: lambda_top must be >= r_min");
      current_ = params_.r_min;
      break;
    case LambdaMode::kAma:
      if (params_.window == 0) throw ConfigError("lambda ama: window must be > 0");
      current_ = params_.lambda_0;
      break;
  }
}

double LambdaController::window_mean() const {
  if (window_.empty()) return 0.0;
  return std::accumulate(window_.begin(), window_.end(), 0.0) / static_cast<double>(window_.size());
}

double LambdaController::next(std::int64_t t, std::int64_t j) {
  switch (params_.mode) {
    case LambdaMode::kFix:
      current_ = params_.fix_value;
      break;
    case LambdaMode::kPredefined: {
      const double p = saturating_profile(t, params_.total_steps, params_.z_sat);
      current_ = std::lerp(params_.r_min, params_.lambda_top, p);
      break;
    }
    case LambdaMode::kAma:
      if (j > static_cast<std::int64_t>(params_.window) && window_.size() == params_.window) {
        current_ = std::min(params_.lambda_max, params_.shift + window_mean());
      } else {
        current_ = params_.lambda_0;
      }
      break;
  }
  return current_;
}

void LambdaController::record_return(double episode_return) {
  if (!std::isfinite(episode_return)) throw InputError("lambda record_return: non-finite return");
  if (params_.mode != LambdaMode::kAma) return;
  window_.push_back(episode_return);
  while (window_.size() > params_.window) window_.pop_front();
}

XiController::XiController(XiParams params) : params_(params) {
  if (!(params_.fix_value >= 0.0 && params_.fix_value <= 1.0)) throw ConfigError("xi: fix value must lie in [0, 1]");
  if (!(params_.alpha_p >= 0.0 && params_.alpha_p <= 1.0)) throw ConfigError("xi: alpha_p must lie in [0, 1]");
  if (!(params_.initial >= 0.0 && params_.initial <= 1.0)) throw ConfigError("xi: initial value must lie in [0, 1]");
  current_ = params_.mode == XiMode::kFix ? params_.fix_value : params_.initial;
}

double XiController::next(double l_hier, double l_ser) {
  if (!(l_hier >= 0.0) || !(l_ser >= 0.0) || !std::isfinite(l_hier) || !std::isfinite(l_ser))
    throw InputError("xi_next: losses must be finite and >= 0");
  last_l_hier_ = l_hier;
  last_l_ser_ = l_ser;
  if (params_.mode == XiMode::kFix) {
    current_ = params_.fix_value;
    return current_;
  }
  if (params_.alpha_p == 0.0) {
    current_ = 0.5;
    return current_;
  }
  const double h = std::pow(l_hier, params_.alpha_p);
  const double s = std::pow(l_ser, params_.alpha_p);
  current_ = (h + s) > 0.0 ? h / (h + s) : 0.5;
  return current_;
}

BatchSplit split_batch(std::size_t n, double xi, std::size_t hier_count) {
  if (n == 0) throw InputError("split_batch: n must be > 0");
  if (!(xi >= 0.0 && xi <= 1.0)) throw InputError("split_batch: xi must lie in [0, 1]");
  if (hier_count == 0) return {n, 0};
  const auto n_hier = std::min(n, static_cast<std::size_t>(std::floor(xi * static_cast<double>(n) + 0.5)));
  return {n - n_hier, n_hier};
}

}  // namespace hierlab
