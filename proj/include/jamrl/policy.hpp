#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <deque>
#include <optional>

#include "jamrl/rng.hpp"

namespace jamrl {

/// State of the (tau, eps)-greedy policy: repeat probability tau, exploration
/// rate eps with its decay schedule, and the sliding window of recent
/// utilities that defines the dynamic threshold.
struct PolicyState {
  double tau = 0.0;
  double epsilon = 0.3;
  double sigma1 = 0.8;   // shape of the tau ramp when utility beats the mean
  double sigma2 = 85.0;  // shape when it does not
  double epsilon_decay = 0.995;
  double epsilon_min = 0.01;
  // Flip the tau map to the positive-exponent variant; the output is
  // clamped to [0, 1] either way.
  bool paper_literal_tau = false;
  std::size_t window_capacity = 5;  // T
  std::deque<double> utility_window;

  void validate() const;  // throws std::invalid_argument
};

/// Append a utility to the window, evicting the oldest entry past capacity.
void record_utility(PolicyState& state, double utility);

/// Mean of the stored utilities (over fewer than T entries during warm-up).
/// Empty window yields nullopt; the caller keeps tau at its current value.
std::optional<double> mean_recent_utility(const PolicyState& state);

/// Update tau from the latest utility via the Gaussian-like map against the
/// window mean, then record the utility. Returns the new tau, in [0, 1].
double update_tau(double utility, PolicyState& state);

/// One multiplicative decay step: eps <- max(eps * decay, eps_min).
double decay_epsilon(PolicyState& state);

enum class Branch { repeat, explore, greedy };

struct SelectResult {
  int action = 0;
  Branch branch = Branch::greedy;
};

/// Index of the maximum entry, ties broken by lowest index.
int argmax_lowest(const Eigen::VectorXd& values);

/// Hierarchical (tau, eps)-greedy selection: with probability tau repeat the
/// previous action; otherwise eps-greedy over the given action values. With
/// no previous action the repeat branch is skipped. Classic eps-greedy is the
/// tau = 0 special case.
template <class R>
SelectResult select_action(const Eigen::VectorXd& q_values,
                           std::optional<int> prev_action,
                           const PolicyState& state, R& rng) {
  const double z = rng.uniform();
  if (prev_action && z <= state.tau) {
    return {*prev_action, Branch::repeat};
  }
  if (rng.uniform() < state.epsilon) {
    return {rng.uniform_int(static_cast<int>(q_values.size())), Branch::explore};
  }
  return {argmax_lowest(q_values), Branch::greedy};
}

}  // namespace jamrl
