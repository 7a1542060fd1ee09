#pragma once

// Highlight-buffer controllers: the admission threshold lambda and the batch
// ratio xi between the highlight and the standard buffer.

#include <cstddef>
#include <cstdint>
#include <deque>

namespace hierlab {

enum class LambdaMode { kFix, kPredefined, kAma };

struct LambdaParams {
  LambdaMode mode = LambdaMode::kPredefined;
  double fix_value = 0.0;     // fix: constant threshold
  double z_sat = 0.5;         // predefined: fraction of training at which the profile saturates
  std::int64_t total_steps = 0;
  double r_min = -100.0;      // predefined: threshold at t = 0 (lowest possible return)
  double lambda_top = -5.0;   // predefined: threshold after saturation
  double lambda_0 = -100.0;   // ama: value for the first w episodes
  double lambda_max = 0.0;    // ama: upper clip
  std::size_t window = 10;    // ama: number of recent returns averaged
  double shift = 0.0;         // ama: constant M added to the moving average
};

/// Episode-return threshold for admission into the highlight buffer.
///
/// `predefined` evaluates the saturating linear profile
///     p(t) = min(1, t / (total_steps * z_sat))   in [0, 1]
/// and maps it affinely onto returns, lambda = r_min + p(t) (lambda_top - r_min),
/// because sparse-reward returns live in [-T, 0]. `ama` tracks a moving
/// average of the last `window` episode returns plus `shift`, clipped at
/// lambda_max, and holds lambda_0 until more than `window` episodes finished.
class LambdaController {
 public:
  explicit LambdaController(LambdaParams params);

  /// Threshold for episode j (1-based) finishing at global step t.
  double next(std::int64_t t, std::int64_t j);
  void record_return(double episode_return);

  double current() const { return current_; }
  double window_mean() const;
  std::size_t window_size() const { return window_.size(); }
  const LambdaParams& params() const { return params_; }

 private:
  LambdaParams params_;
  std::deque<double> window_;
  double current_;
};

/// Normalised predefined profile min(1, t / (total * z_sat)) clipped to [0, 1].
double saturating_profile(std::int64_t t, std::int64_t total, double z_sat);

enum class XiMode { kFix, kPrioritized };

struct XiParams {
  XiMode mode = XiMode::kFix;
  double fix_value = 0.5;
  double alpha_p = 0.5;
  double initial = 0.5;  // prioritized: value before the first update
};

class XiController {
 public:
  explicit XiController(XiParams params);

  /// L_hier, L_ser are mean absolute TD errors of the two sub-batches.
  double next(double l_hier, double l_ser);
  double current() const { return current_; }
  double last_l_hier() const { return last_l_hier_; }
  double last_l_ser() const { return last_l_ser_; }
  const XiParams& params() const { return params_; }

 private:
  XiParams params_;
  double current_;
  double last_l_hier_ = 0.0;
  double last_l_ser_ = 0.0;
};

struct BatchSplit {
  std::size_t n_ser = 0;
  std::size_t n_hier = 0;
  bool operator==(const BatchSplit&) const = default;
};

/// n_hier = round-half-up(xi * n), forced to 0 while the highlight buffer is empty.
BatchSplit split_batch(std::size_t n, double xi, std::size_t hier_count);

}  // namespace hierlab
