#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "jamrl/network.hpp"
#include "jamrl/radio.hpp"
#include "jamrl/rng.hpp"

namespace jamrl {

/// One stored transition: input window, successor window, action and reward.
struct Experience {
  Tensor phi;
  Tensor phi_next;
  SenderAction action;
  double reward = 0.0;
};

struct ReplayConfig {
  std::size_t capacity = 1024;  // rounded up to a power of two by SumTree
  std::size_t batch_size = 10;  // M
  double lambda = 0.4;          // importance-sampling exponent
  double priority_floor = 1e-4;
  enum class Selection {
    proportional_stratified,  // stratified draws over the priority mass
    top_m,                    // literal "first M in descending probability"
    uniform                   // plain uniform buffer for DQN/DDQN baselines
  };
  Selection selection = Selection::proportional_stratified;
  // Recompute every stored priority after each update instead of only the
  // sampled minibatch.
  bool full_priority_refresh = false;

  void validate() const;  // throws std::invalid_argument
};

/// Priority-indexed ring store. Every internal node holds the sum of its
/// children, so proportional sampling is a root-to-leaf descent.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity);

  /// Store an experience with priority max_priority(); overwrites the oldest
  /// entry when full. Returns the leaf index.
  std::size_t push(Experience e);

  /// Set a leaf priority and repair every ancestor sum.
  void update_priority(std::size_t leaf, double priority);

  double priority(std::size_t leaf) const;
  double total() const;  // root: sum of all leaf priorities
  std::size_t size() const { return count_; }
  std::size_t capacity() const { return capacity_; }
  const Experience& experience(std::size_t leaf) const;
  double max_priority() const { return max_priority_; }

  /// Leaf whose cumulative priority range contains `mass` (mass in [0, total]).
  std::size_t find_prefix(double mass) const;

  /// Worst absolute violation of node = left + right over the whole tree.
  double max_parent_sum_error() const;

 private:
  std::size_t capacity_;            // power of two
  std::vector<double> nodes_;       // 1-based heap; leaves at [capacity_, 2*capacity_)
  std::vector<Experience> data_;
  std::size_t next_ = 0;
  std::size_t count_ = 0;
  double max_priority_ = 1.0;
};

/// Probability of drawing the given leaf under proportional sampling (Eq. of
/// the priority over the total mass). Throws on an empty tree.
double probability_of(const SumTree& tree, std::size_t leaf);

struct SampledBatch {
  std::vector<std::size_t> leaves;
  std::vector<double> probabilities;  // P_i backing the importance weights
};

/// Draw a batch of size cfg.batch_size according to cfg.selection. Requires
/// tree.size() >= batch_size ("insufficient samples" otherwise); the caller
/// skips learning for that slot.
SampledBatch sample_batch(const SumTree& tree, const ReplayConfig& cfg, Rng& rng);

/// Batch-normalised importance weights (M * P_i)^(-lambda) / max_j. All
/// outputs lie in (0, 1]; lambda = 0 gives all ones.
std::vector<double> importance_weights(std::span<const double> probabilities,
                                       std::size_t batch_size, double lambda);

/// Set each leaf's priority to max(|td_error|, floor) and repair the sums.
void update_priorities(SumTree& tree, std::span<const std::size_t> leaves,
                       std::span<const double> td_errors, double priority_floor);

}  // namespace jamrl
