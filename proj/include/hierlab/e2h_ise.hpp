#pragma once

// Easy-to-hard initial-state-entropy curriculum: a scale factor c in [0, 1]
// shrinks the uniform initial state-goal distribution towards its center.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "hierlab/rng.hpp"

namespace hierlab {

enum class CMode { kPredefined, kSelfPaced, kControl, kControlAdaptive };

struct CParams {
  CMode mode = CMode::kSelfPaced;
  double c0 = 0.0;
  double delta = 0.05;
  double psi_high = 0.8;
  double psi_low = 0.0;
  double psi = 0.5;       // control: target training success rate
  double psi_max = 0.9;   // control_adaptive: upper clip of the target
  double shift = 0.2;     // control_adaptive: Delta added to the mean eval success
  std::size_t window = 50;
  double z_sat = 0.5;     // predefined
};

class CController {
 public:
  explicit CController(CParams params);

  /// c for episode j (1-based) starting after global step t.
  double next(std::int64_t t, std::int64_t total_steps, std::int64_t j);

  void record_train_outcome(bool success);
  void record_eval_success(double rate);

  double current() const { return c_; }
  /// Mean of the training-success window (0 when empty).
  double train_rate() const;
  double eval_rate() const;
  std::size_t train_window_size() const { return train_window_.size(); }
  std::size_t eval_window_size() const { return eval_window_.size(); }
  /// Target used by the last control_adaptive update.
  double adaptive_target() const { return adaptive_target_; }
  const CParams& params() const { return params_; }

 private:
  CParams params_;
  double c_;
  double adaptive_target_;
  std::deque<double> train_window_;
  std::deque<double> eval_window_;
};

/// Axis-aligned box of initial state-goal vectors.
struct InitSpace {
  std::vector<double> lower;
  std::vector<double> upper;

  InitSpace() = default;
  InitSpace(std::vector<double> lo, std::vector<double> hi);

  std::size_t dim() const { return lower.size(); }
  std::vector<double> center() const;
};

/// center + c (u - center), u ~ Uniform(lower, upper). Throws InputError for c outside [0, 1].
std::vector<double> sample_initial(const InitSpace& space, double c, Rng& rng);

}  // namespace hierlab
