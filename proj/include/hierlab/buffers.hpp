#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hierlab/core.hpp"
#include "hierlab/rng.hpp"

namespace hierlab {

/// Dimensions of one stored transition. Rows are laid out as
/// [obs | action | next_obs | reward | done] with obs = [state | achieved | desired].
struct TransitionLayout {
  std::size_t state_dim = 0;
  std::size_t goal_dim = 0;
  std::size_t action_dim = 0;

  std::size_t obs_dim() const { return state_dim + 2 * goal_dim; }
  std::size_t row_size() const { return 2 * obs_dim() + action_dim + 2; }
  bool operator==(const TransitionLayout&) const = default;
};

/// Circular transition store. Storage grows lazily up to `capacity` rows;
/// after that every push overwrites the oldest slot.
class RingBuffer {
 public:
  RingBuffer(std::size_t capacity, TransitionLayout layout);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  std::size_t write_cursor() const { return cursor_; }
  std::uint64_t total_pushed() const { return total_pushed_; }
  const TransitionLayout& layout() const { return layout_; }

  /// Appends one transition and returns the slot it was written to.
  std::size_t push(const Transition& tr);
  /// Appends every transition of the episode in order.
  void push_episode(const Episode& episode);

  /// Transition stored at a physical slot.
  Transition at_slot(std::size_t slot) const;
  /// i-th oldest stored transition (0 = oldest).
  Transition at(std::size_t i) const;
  /// Slot holding the i-th oldest transition.
  std::size_t slot_of(std::size_t i) const;
  std::vector<Transition> contents() const;

  /// Copies the given slots into rows [offset, offset + slots.size()) of `out`.
  void gather(std::span<const std::size_t> slots, Batch& out, std::size_t offset) const;

  /// Binary snapshot, see README "Buffer snapshot format".
  void save(std::ostream& os) const;
  static RingBuffer load(std::istream& is);

 private:
  std::span<const double> row(std::size_t slot) const {
    return {storage_.data() + slot * layout_.row_size(), layout_.row_size()};
  }

  std::size_t capacity_;
  TransitionLayout layout_;
  std::vector<double> storage_;
  std::size_t cursor_ = 0;
  std::size_t count_ = 0;
  std::uint64_t total_pushed_ = 0;
};

/// n slots drawn i.i.d. uniformly with replacement. Throws UsageError when empty.
std::vector<std::size_t> uniform_sample_slots(const RingBuffer& buf, std::size_t n, Rng& rng);
std::vector<Transition> uniform_sample(const RingBuffer& buf, std::size_t n, Rng& rng);

struct PerParams {
  double alpha = 0.6;
  double beta0 = 0.4;  // annealed linearly to 1 over training
  double eps = 1e-6;
};

/// Proportional prioritisation over the slots of one RingBuffer. Leaves hold
/// priority^alpha in an array-backed sum tree whose internal nodes are always
/// recomputed as left + right.
class PriorityIndex {
 public:
  PriorityIndex(std::size_t capacity, PerParams params);

  const PerParams& params() const { return params_; }
  std::size_t capacity() const { return capacity_; }

  /// New transitions enter with the largest priority seen so far.
  void on_insert(std::size_t slot);
  /// Sets the raw priority p (> 0) of a slot.
  void set_priority(std::size_t slot, double priority);
  double priority(std::size_t slot) const { return priorities_[slot]; }
  double max_priority() const { return max_priority_; }

  double total() const { return tree_[1]; }
  double leaf(std::size_t slot) const { return tree_[leaves_ + slot]; }
  /// P(slot) = p^alpha / sum p^alpha.
  double probability(std::size_t slot) const { return leaf(slot) / total(); }
  /// Slot whose cumulative-mass interval contains u in [0, total()).
  std::size_t find_prefix(double u, std::size_t count) const;

  /// Whole tree, node 1 is the root and leaves start at leaf_offset().
  std::span<const double> tree() const { return tree_; }
  std::size_t leaf_offset() const { return leaves_; }

 private:
  void write_leaf(std::size_t slot, double value);

  std::size_t capacity_;
  std::size_t leaves_;
  PerParams params_;
  std::vector<double> tree_;
  std::vector<double> priorities_;
  double max_priority_ = 1.0;
};

struct PerBatch {
  std::vector<std::size_t> slots;
  std::vector<double> is_weights;  // normalised so the largest is exactly 1
};

/// Proportional PER sampling with importance weights (N P(i))^-beta / max.
PerBatch per_sample(const RingBuffer& buf, const PriorityIndex& index, std::size_t n, double beta, Rng& rng);

/// priority = |td| + eps for each sampled slot.
void per_update(PriorityIndex& index, const RingBuffer& buf, std::span<const std::size_t> slots,
                std::span<const double> td_errors);

enum class HerStrategy { kFinal, kFuture };

struct HerSpec {
  HerStrategy strategy = HerStrategy::kFuture;
  int k_relabel = 4;
};

/// Virtual transitions with the desired goal replaced by an achieved goal of
/// the same episode. The input episode is not modified.
std::vector<Transition> her_relabel(const Episode& episode, const HerSpec& spec, const RewardSpec& reward_spec,
                                    Rng& rng);

/// Stores the episode in the highlight buffer iff lambda < its undiscounted return.
bool hier_store(RingBuffer& b_hier, const Episode& episode, double lambda);

}  // namespace hierlab
