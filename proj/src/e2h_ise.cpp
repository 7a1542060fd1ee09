#include "hierlab/e2h_ise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hierlab/error.hpp"
#include "hierlab/hier_ctl.hpp"

namespace hierlab {
namespace {

double mean(const std::deque<double>& w) {
  if (w.empty()) return 0.0;
  return std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
}

void push_bounded(std::deque<double>& w, double v, std::size_t cap) {
  w.push_back(v);
  while (w.size() > cap) w.pop_front();
}

}  // namespace

CController::CController(CParams params) : params_(params), c_(params.c0), adaptive_target_(params.psi) {
  if (!(params_.c0 >= 0.0 && params_.c0 <= 1.0)) throw ConfigError("e2h: c0 must lie in [0, 1]");
  if (!(params_.delta >= 0.0 && params_.delta <= 1.0)) throw ConfigError("e2h: delta must lie in [0, 1]");
  if (!(params_.shift >= 0.0 && params_.shift <= 1.0)) throw ConfigError("e2h: shift must lie in [0, 1]");
  if (params_.window == 0) throw ConfigError("e2h: window must be > 0");
  if (!(params_.z_sat > 0.0 && params_.z_sat <= 1.0)) throw ConfigError("e2h: z_sat must lie in (0, 1]");
}

double CController::train_rate() const { return mean(train_window_); }
double CController::eval_rate() const { return mean(eval_window_); }

void CController::record_train_outcome(bool success) {
  push_bounded(train_window_, success ? 1.0 : 0.0, params_.window);
}

void CController::record_eval_success(double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InputError("e2h: eval success rate must lie in [0, 1]");
  push_bounded(eval_window_, rate, params_.window);
}

double CController::next(std::int64_t t, std::int64_t total_steps, std::int64_t j) {
  const auto w = static_cast<std::int64_t>(params_.window);
  const bool window_full = train_window_.size() == params_.window;
  switch (params_.mode) {
    case CMode::kPredefined:
      c_ = saturating_profile(t, total_steps, params_.z_sat);
      break;
    case CMode::kSelfPaced: {
      // The window is emptied after every change, so a full window also
      // enforces the w-episode wait before the next change.
      if (j <= w || !window_full) break;
      const double rate = train_rate();
      double updated = c_;
      if (rate > params_.psi_high) {
        updated = std::min(1.0, c_ + params_.delta);
      } else if (rate < params_.psi_low) {
        updated = std::max(0.0, c_ - params_.delta);
      } else {
        break;
      }
      // Any triggered update restarts the window, even when clipping leaves c unchanged.
      c_ = updated;
      train_window_.clear();
      break;
    }
    case CMode::kControl:
    case CMode::kControlAdaptive: {
      if (j <= w || !window_full) break;
      double target = params_.psi;
      if (params_.mode == CMode::kControlAdaptive) {
        target = std::min(params_.psi_max, params_.shift + eval_rate());
        adaptive_target_ = target;
      }
      c_ = train_rate() >= target ? std::min(1.0, c_ + params_.delta) : std::max(0.0, c_ - params_.delta);
      break;
    }
  }
  return c_;
}

InitSpace::InitSpace(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.empty()) throw ConfigError("init space: bound dimension mismatch");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i])) throw ConfigError("init space: lower must be < upper on every axis");
}

std::vector<double> InitSpace::center() const {
  std::vector<double> c(lower.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
  return c;
}

std::vector<double> sample_initial(const InitSpace& space, double c, Rng& rng) {
  if (!(c >= 0.0 && c <= 1.0)) throw InputError("sample_initial: c must lie in [0, 1]");
  std::vector<double> out = space.center();
  if (c == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double u = space.lower[i] + uniform01(rng) * (space.upper[i] - space.lower[i]);
    out[i] = std::clamp(out[i] + c * (u - out[i]), space.lower[i], space.upper[i]);
  }
  return out;
}

}  // namespace hierlab
