#include "jamrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace jamrl {

namespace {

// Gaussian-like value (1 / (sqrt(2 pi) sigma)) exp(-d^2 / (2 sigma^2)).
// paper_literal flips the exponent sign.
double gaussian_like(double d, double sigma, bool paper_literal) {
  const double sign = paper_literal ? 1.0 : -1.0;
  return 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma) *
         std::exp(sign * d * d / (2.0 * sigma * sigma));
}

}  // namespace

void PolicyState::validate() const {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
    throw std::invalid_argument("PolicyState: sigma1 and sigma2 must be > 0");
  if (tau < 0.0 || tau > 1.0)
    throw std::invalid_argument("PolicyState: tau must be in [0, 1]");
  if (epsilon < 0.0 || epsilon > 1.0 || epsilon_min < 0.0 || epsilon_min > 1.0)
    throw std::invalid_argument("PolicyState: epsilon bounds must be in [0, 1]");
  if (!(epsilon_decay > 0.0) || epsilon_decay > 1.0)
    throw std::invalid_argument("PolicyState: epsilon_decay must be in (0, 1]");
  if (window_capacity < 1)
    throw std::invalid_argument("PolicyState: window capacity T must be >= 1");
}

void record_utility(PolicyState& state, double utility) {
  state.utility_window.push_back(utility);
  while (state.utility_window.size() > state.window_capacity) {
    state.utility_window.pop_front();
  }
}

std::optional<double> mean_recent_utility(const PolicyState& state) {
  if (state.utility_window.empty()) return std::nullopt;
  const double sum = std::accumulate(state.utility_window.begin(),
                                     state.utility_window.end(), 0.0);
  return sum / static_cast<double>(state.utility_window.size());
}

double update_tau(double utility, PolicyState& state) {
  if (const auto mean = mean_recent_utility(state)) {
    const double d = utility - *mean;
    const double tau =
        d > 0.0 ? 1.0 - gaussian_like(d, state.sigma1, state.paper_literal_tau)
                : gaussian_like(d, state.sigma2, state.paper_literal_tau);
    state.tau = std::clamp(tau, 0.0, 1.0);
  }
  record_utility(state, utility);
  return state.tau;
}

double decay_epsilon(PolicyState& state) {
  state.epsilon = std::max(state.epsilon * state.epsilon_decay, state.epsilon_min);
  return state.epsilon;
}

int argmax_lowest(const Eigen::VectorXd& values) {
  int best = 0;
  for (int i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace jamrl
