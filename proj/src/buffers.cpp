#include "hierlab/buffers.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "hierlab/error.hpp"

namespace hierlab {
namespace {

constexpr std::array<char, 8> kSnapshotMagic{'H', 'I', 'E', 'R', 'B', 'U', 'F', '\0'};
constexpr std::uint32_t kSnapshotVersion = 1;

void check_dims(const TransitionLayout& layout, const Transition& tr) {
  auto obs_ok = [&](const GoalObservation& o) {
    return o.state.size() == layout.state_dim && o.achieved_goal.size() == layout.goal_dim &&
           o.desired_goal.size() == layout.goal_dim;
  };
  if (!obs_ok(tr.obs) || !obs_ok(tr.next_obs) || tr.action.size() != layout.action_dim)
    throw InputError("ring buffer: transition shape does not match buffer layout");
}

GoalObservation read_obs(std::span<const double> src, const TransitionLayout& layout) {
  GoalObservation o;
  auto it = src.begin();
  o.state.assign(it, it + layout.state_dim);
  it += layout.state_dim;
  o.achieved_goal.assign(it, it + layout.goal_dim);
  it += layout.goal_dim;
  o.desired_goal.assign(it, it + layout.goal_dim);
  return o;
}

void write_u64(std::ostream& os, std::uint64_t v) {
  std::array<unsigned char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes.data()), 8);
}

std::uint64_t read_u64(std::istream& is) {
  std::array<unsigned char, 8> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), 8)) throw InputError("buffer snapshot: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

RingBuffer::RingBuffer(std::size_t capacity, TransitionLayout layout) : capacity_(capacity), layout_(layout) {
  if (capacity == 0) throw ConfigError("ring buffer: capacity must be > 0");
}

std::size_t RingBuffer::push(const Transition& tr) {
  check_dims(layout_, tr);
  const std::size_t rs = layout_.row_size();
  const std::size_t slot = cursor_;
  if (storage_.size() < (slot + 1) * rs) storage_.resize((slot + 1) * rs);
  double* dst = storage_.data() + slot * rs;
  const std::size_t od = layout_.obs_dim();
  tr.obs.flatten_into({dst, od});
  std::copy(tr.action.begin(), tr.action.end(), dst + od);
  tr.next_obs.flatten_into({dst + od + layout_.action_dim, od});
  dst[rs - 2] = tr.reward;
  dst[rs - 1] = tr.done ? 1.0 : 0.0;

  cursor_ = (cursor_ + 1) % capacity_;
  count_ = std::min(count_ + 1, capacity_);
  ++total_pushed_;
  return slot;
}

void RingBuffer::push_episode(const Episode& episode) {
  if (episode.empty()) throw InputError("push_episode: empty episode");
  for (const auto& tr : episode.transitions) push(tr);
}

Transition RingBuffer::at_slot(std::size_t slot) const {
  if (slot >= count_) throw InputError("ring buffer: slot " + std::to_string(slot) + " not populated");
  const auto r = row(slot);
  const std::size_t od = layout_.obs_dim();
  Transition tr;
  tr.obs = read_obs(r.subspan(0, od), layout_);
  tr.action.assign(r.begin() + od, r.begin() + od + layout_.action_dim);
  tr.next_obs = read_obs(r.subspan(od + layout_.action_dim, od), layout_);
  tr.reward = r[r.size() - 2];
  tr.done = r[r.size() - 1] != 0.0;
  return tr;
}

std::size_t RingBuffer::slot_of(std::size_t i) const {
  if (i >= count_) throw InputError("ring buffer: index out of range");
  const std::size_t oldest = count_ < capacity_ ? 0 : cursor_;
  return (oldest + i) % capacity_;
}

Transition RingBuffer::at(std::size_t i) const { return at_slot(slot_of(i)); }

std::vector<Transition> RingBuffer::contents() const {
  std::vector<Transition> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < count_; ++i) out.push_back(at(i));
  return out;
}

void RingBuffer::gather(std::span<const std::size_t> slots, Batch& out, std::size_t offset) const {
  const std::size_t od = layout_.obs_dim();
  const std::size_t ad = layout_.action_dim;
  if (out.obs.cols != od || out.action.cols != ad || offset + slots.size() > out.size())
    throw InputError("ring buffer: gather target has wrong shape");
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (slots[k] >= count_) throw InputError("ring buffer: gather slot out of range");
    const auto r = row(slots[k]);
    const std::size_t b = offset + k;
    std::copy(r.begin(), r.begin() + od, out.obs.row(b).begin());
    std::copy(r.begin() + od, r.begin() + od + ad, out.action.row(b).begin());
    std::copy(r.begin() + od + ad, r.begin() + 2 * od + ad, out.next_obs.row(b).begin());
    out.reward[b] = r[r.size() - 2];
    out.done[b] = r[r.size() - 1];
  }
}

void RingBuffer::save(std::ostream& os) const {
  os.write(kSnapshotMagic.data(), kSnapshotMagic.size());
  write_u64(os, kSnapshotVersion);
  write_u64(os, capacity_);
  write_u64(os, count_);
  write_u64(os, layout_.state_dim);
  write_u64(os, layout_.goal_dim);
  write_u64(os, layout_.action_dim);
  for (std::size_t i = 0; i < count_; ++i) {
    for (double v : row(slot_of(i))) write_u64(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw InputError("buffer snapshot: write failed");
}

RingBuffer RingBuffer::load(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kSnapshotMagic)
    throw InputError("buffer snapshot: bad magic");
  const auto version = read_u64(is);
  if (version != kSnapshotVersion) throw InputError("buffer snapshot: unsupported version " + std::to_string(version));
  const auto capacity = read_u64(is);
  const auto count = read_u64(is);
  TransitionLayout layout;
  layout.state_dim = read_u64(is);
  layout.goal_dim = read_u64(is);
  layout.action_dim = read_u64(is);
  if (count > capacity) throw InputError("buffer snapshot: count exceeds capacity");
  RingBuffer buf(capacity, layout);
  const std::size_t rs = layout.row_size();
  buf.storage_.resize(count * rs);
  for (std::size_t k = 0; k < count * rs; ++k) buf.storage_[k] = std::bit_cast<double>(read_u64(is));
  buf.count_ = count;
  buf.cursor_ = count % capacity;
  buf.total_pushed_ = count;
  return buf;
}

std::vector<std::size_t> uniform_sample_slots(const RingBuffer& buf, std::size_t n, Rng& rng) {
  if (n == 0) return {};
  if (buf.empty()) throw UsageError("uniform_sample: buffer is empty");
  std::vector<std::size_t> slots(n);
  for (auto& s : slots) s = uniform_index(rng, buf.size());
  return slots;
}

std::vector<Transition> uniform_sample(const RingBuffer& buf, std::size_t n, Rng& rng) {
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t s : uniform_sample_slots(buf, n, rng)) out.push_back(buf.at_slot(s));
  return out;
}

// ---------------------------------------------------------------------------

PriorityIndex::PriorityIndex(std::size_t capacity, PerParams params)
    : capacity_(capacity), leaves_(std::bit_ceil(std::max<std::size_t>(capacity, 1))), params_(params) {
  if (capacity == 0) throw ConfigError("priority index: capacity must be > 0");
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) throw ConfigError("per: alpha must lie in [0, 1]");
  if (!(params.beta0 >= 0.0 && params.beta0 <= 1.0)) throw ConfigError("per: beta must lie in [0, 1]");
  if (!(params.eps > 0.0)) throw ConfigError("per: eps must be > 0");
  tree_.assign(2 * leaves_, 0.0);
  priorities_.assign(capacity, 0.0);
}

void PriorityIndex::write_leaf(std::size_t slot, double value) {
  std::size_t node = leaves_ + slot;
  tree_[node] = value;
  for (node /= 2; node >= 1; node /= 2) tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
}

void PriorityIndex::on_insert(std::size_t slot) { set_priority(slot, max_priority_); }

void PriorityIndex::set_priority(std::size_t slot, double priority) {
  if (slot >= capacity_) throw InputError("priority index: slot out of range");
  if (!(priority > 0.0) || !std::isfinite(priority)) throw InputError("priority index: priority must be finite and > 0");
  priorities_[slot] = priority;
  max_priority_ = std::max(max_priority_, priority);
  write_leaf(slot, std::pow(priority, params_.alpha));
}

std::size_t PriorityIndex::find_prefix(double u, std::size_t count) const {
  std::size_t node = 1;
  while (node < leaves_) {
    const std::size_t left = 2 * node;
    if (u < tree_[left] || tree_[left + 1] <= 0.0) {
      node = left;
    } else {
      u -= tree_[left];
      node = left + 1;
    }
  }
  std::size_t slot = node - leaves_;
  // Rounding at the right edge can land on an empty leaf.
  if (slot >= count) slot = count - 1;
  while (slot > 0 && tree_[leaves_ + slot] <= 0.0) --slot;
  return slot;
}

PerBatch per_sample(const RingBuffer& buf, const PriorityIndex& index, std::size_t n, double beta, Rng& rng) {
  if (buf.empty()) throw UsageError("per_sample: buffer is empty");
  if (index.capacity() != buf.capacity()) throw InputError("per_sample: index/buffer capacity mismatch");
  PerBatch out;
  out.slots.resize(n);
  out.is_weights.resize(n);
  const double total = index.total();
  const double count = static_cast<double>(buf.size());
  double max_w = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = uniform01(rng) * total;
    const std::size_t slot = index.find_prefix(u, buf.size());
    out.slots[k] = slot;
    out.is_weights[k] = std::pow(count * index.probability(slot), -beta);
    max_w = std::max(max_w, out.is_weights[k]);
  }
  for (auto& w : out.is_weights) w /= max_w;
  return out;
}

void per_update(PriorityIndex& index, const RingBuffer& buf, std::span<const std::size_t> slots,
                std::span<const double> td_errors) {
  if (slots.size() != td_errors.size()) throw InputError("per_update: slots/td_errors length mismatch");
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (slots[k] >= buf.size()) throw InputError("per_update: invalid index " + std::to_string(slots[k]));
    if (!std::isfinite(td_errors[k])) throw InputError("per_update: non-finite td error");
  }
  for (std::size_t k = 0; k < slots.size(); ++k)
    index.set_priority(slots[k], std::abs(td_errors[k]) + index.params().eps);
}

// ---------------------------------------------------------------------------

std::vector<Transition> her_relabel(const Episode& episode, const HerSpec& spec, const RewardSpec& reward_spec,
                                    Rng& rng) {
  if (episode.empty()) throw InputError("her_relabel: empty episode");
  if (spec.k_relabel < 1) throw ConfigError("her_relabel: k_relabel must be >= 1");
  const auto& trs = episode.transitions;
  const std::size_t len = trs.size();

  auto relabel = [&](const Transition& src, const std::vector<double>& goal) {
    Transition v = src;
    v.obs.desired_goal = goal;
    v.next_obs.desired_goal = goal;
    v.reward = sparse_reward(v.next_obs.achieved_goal, goal, reward_spec);
    v.done = v.reward == 0.0;
    return v;
  };

  std::vector<Transition> out;
  if (spec.strategy == HerStrategy::kFinal) {
    const auto& goal = trs.back().next_obs.achieved_goal;
    out.reserve(len);
    for (const auto& tr : trs) out.push_back(relabel(tr, goal));
    return out;
  }
  out.reserve(len * static_cast<std::size_t>(spec.k_relabel));
  for (std::size_t t = 0; t < len; ++t) {
    for (int k = 0; k < spec.k_relabel; ++k) {
      const std::size_t future = t + uniform_index(rng, len - t);
      out.push_back(relabel(trs[t], trs[future].next_obs.achieved_goal));
    }
  }
  return out;
}

bool hier_store(RingBuffer& b_hier, const Episode& episode, double lambda) {
  if (!std::isfinite(lambda)) throw InputError("hier_store: lambda must be finite");
  if (!(lambda < undiscounted_return(episode))) return false;
  b_hier.push_episode(episode);
  return true;
}

}  // namespace hierlab
