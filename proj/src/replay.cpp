#include "jamrl/replay.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace jamrl {

void ReplayConfig::validate() const {
  if (capacity < 1) throw std::invalid_argument("replay: capacity must be >= 1");
  if (batch_size < 1 || batch_size > capacity) {
    throw std::invalid_argument("replay: need 1 <= batch_size <= capacity");
  }
  if (lambda < 0.0 || lambda > 1.0) {
    throw std::invalid_argument("replay: lambda must be in [0, 1]");
  }
  if (!(priority_floor > 0.0)) {
    throw std::invalid_argument("replay: priority_floor must be > 0");
  }
}

SumTree::SumTree(std::size_t capacity)
    : capacity_(std::bit_ceil(std::max<std::size_t>(capacity, 1))),
      nodes_(2 * capacity_, 0.0),
      data_(capacity_) {}

std::size_t SumTree::push(Experience e) {
  const std::size_t leaf = next_;
  data_[leaf] = std::move(e);
  update_priority(leaf, max_priority_);
  next_ = (next_ + 1) % capacity_;
  count_ = std::min(count_ + 1, capacity_);
  return leaf;
}

void SumTree::update_priority(std::size_t leaf, double priority) {
  if (leaf >= capacity_) throw std::out_of_range("SumTree: leaf index out of range");
  if (!(priority >= 0.0)) throw std::invalid_argument("SumTree: priority must be >= 0");
  std::size_t node = capacity_ + leaf;
  nodes_[node] = priority;
  // Repair ancestors from their children; recomputing the sums keeps the
  // parent-sum invariant exact instead of accumulating delta drift.
  for (node /= 2; node >= 1; node /= 2) {
    nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
  }
  max_priority_ = std::max(max_priority_, priority);
}

double SumTree::priority(std::size_t leaf) const {
  if (leaf >= capacity_) throw std::out_of_range("SumTree: leaf index out of range");
  return nodes_[capacity_ + leaf];
}

double SumTree::total() const { return nodes_[1]; }

const Experience& SumTree::experience(std::size_t leaf) const {
  if (leaf >= capacity_) throw std::out_of_range("SumTree: leaf index out of range");
  if (count_ < capacity_ && leaf >= count_) {
    throw std::out_of_range("SumTree: leaf not occupied");
  }
  return data_[leaf];
}

std::size_t SumTree::find_prefix(double mass) const {
  std::size_t node = 1;
  while (node < capacity_) {
    const double left = nodes_[2 * node];
    if (mass <= left) {
      node = 2 * node;
    } else {
      mass -= left;
      node = 2 * node + 1;
    }
  }
  return node - capacity_;
}

double SumTree::max_parent_sum_error() const {
  double worst = 0.0;
  for (std::size_t node = 1; node < capacity_; ++node) {
    worst = std::max(worst,
                     std::abs(nodes_[node] - nodes_[2 * node] - nodes_[2 * node + 1]));
  }
  return worst;
}

double probability_of(const SumTree& tree, std::size_t leaf) {
  if (tree.size() == 0 || !(tree.total() > 0.0)) {
    throw std::logic_error("probability_of: empty tree");
  }
  return tree.priority(leaf) / tree.total();
}

SampledBatch sample_batch(const SumTree& tree, const ReplayConfig& cfg, Rng& rng) {
  const std::size_t m = cfg.batch_size;
  if (tree.size() < m) {
    throw std::logic_error("sample_batch: insufficient samples");
  }
  SampledBatch batch;
  batch.leaves.reserve(m);
  batch.probabilities.reserve(m);
  switch (cfg.selection) {
    case ReplayConfig::Selection::uniform: {
      const double p = 1.0 / static_cast<double>(tree.size());
      for (std::size_t i = 0; i < m; ++i) {
        batch.leaves.push_back(
            static_cast<std::size_t>(rng.uniform_int(static_cast<int>(tree.size()))));
        batch.probabilities.push_back(p);
      }
      break;
    }
    case ReplayConfig::Selection::proportional_stratified: {
      const double segment = tree.total() / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double mass = (static_cast<double>(i) + rng.uniform()) * segment;
        const std::size_t leaf = tree.find_prefix(mass);
        batch.leaves.push_back(leaf);
        batch.probabilities.push_back(probability_of(tree, leaf));
      }
      break;
    }
    case ReplayConfig::Selection::top_m: {
      std::vector<std::size_t> order(tree.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double pa = tree.priority(a), pb = tree.priority(b);
        return pa != pb ? pa > pb : a < b;
      });
      for (std::size_t i = 0; i < m; ++i) {
        batch.leaves.push_back(order[i]);
        batch.probabilities.push_back(probability_of(tree, order[i]));
      }
      break;
    }
  }
  return batch;
}

std::vector<double> importance_weights(std::span<const double> probabilities,
                                       std::size_t batch_size, double lambda) {
  std::vector<double> raw(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (!(probabilities[i] > 0.0)) {
      throw std::invalid_argument("importance_weights: probabilities must be > 0");
    }
    raw[i] = std::pow(static_cast<double>(batch_size) * probabilities[i], -lambda);
  }
  const double max = *std::max_element(raw.begin(), raw.end());
  for (auto& w : raw) w /= max;
  return raw;
}

void update_priorities(SumTree& tree, std::span<const std::size_t> leaves,
                       std::span<const double> td_errors, double priority_floor) {
  if (leaves.size() != td_errors.size()) {
    throw std::invalid_argument("update_priorities: length mismatch");
  }
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    tree.update_priority(leaves[i], std::max(std::abs(td_errors[i]), priority_floor));
  }
}

}  // namespace jamrl
