#include "jamrl/radio.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>
#include <stdexcept>

namespace jamrl {

namespace {

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] <= v[i - 1]) return false;
  }
  return true;
}

}  // namespace

double RadioParams::sinr_max() const {
  if (sender_powers.empty()) return 0.0;
  return sender_powers.back() * h_s / beta;
}

void RadioParams::validate() const {
  std::ostringstream errors;
  if (num_channels < 1) errors << "num_channels must be >= 1; ";
  if (sender_powers.empty() || sender_powers.front() < 0.0 ||
      !strictly_increasing(sender_powers))
    errors << "sender_powers must be strictly increasing and >= 0; ";
  if (jammer_powers.empty() || jammer_powers.front() < 0.0 ||
      !strictly_increasing(jammer_powers))
    errors << "jammer_powers must be strictly increasing and >= 0; ";
  if (!(beta > 0.0)) errors << "beta must be > 0; ";
  if (h_s < 0.0) errors << "h_s must be >= 0; ";
  for (double g : h_j)
    if (g < 0.0) {
      errors << "h_j entries must be >= 0; ";
      break;
    }
  if (h_j.empty()) errors << "at least one jammer gain required; ";
  if (cost_retransmit < 0.0) errors << "cost_retransmit must be >= 0; ";
  if (cost_power < 0.0) errors << "cost_power must be >= 0; ";
  const std::string msg = errors.str();
  if (!msg.empty()) throw std::invalid_argument("RadioParams: " + msg);
}

JammerStrategy JammerStrategy::uniform_random() {
  return JammerStrategy{};
}

JammerStrategy JammerStrategy::sweep(int stride, int start_channel) {
  JammerStrategy s;
  s.kind = Kind::sweep;
  s.stride = stride;
  s.channel = start_channel;
  return s;
}

JammerStrategy JammerStrategy::fixed(int channel, int power_index) {
  JammerStrategy s;
  s.kind = Kind::fixed;
  s.channel = channel;
  s.power_index = power_index;
  return s;
}

JammerStrategy JammerStrategy::reactive(double follow_probability) {
  JammerStrategy s;
  s.kind = Kind::reactive;
  s.follow_probability = follow_probability;
  return s;
}

void validate_strategies(std::span<const JammerStrategy> strategies,
                         const RadioParams& params) {
  for (std::size_t j = 0; j < strategies.size(); ++j) {
    const auto& s = strategies[j];
    const std::string where = "jammer " + std::to_string(j) + ": ";
    switch (s.kind) {
      case JammerStrategy::Kind::sweep:
        if (s.stride < 1 || s.stride >= params.num_channels) {
          throw std::invalid_argument(where + "sweep stride must be in [1, N)");
        }
        break;
      case JammerStrategy::Kind::fixed:
        if (s.channel < 0 || s.channel >= params.num_channels ||
            s.power_index < 0 || s.power_index >= params.num_jammer_levels()) {
          throw std::invalid_argument(where + "fixed action out of range");
        }
        break;
      case JammerStrategy::Kind::reactive:
        if (s.follow_probability < 0.0 || s.follow_probability > 1.0) {
          throw std::invalid_argument(where + "follow probability must be in [0, 1]");
        }
        break;
      case JammerStrategy::Kind::uniform_random:
        break;
    }
  }
}

double compute_sinr(const SenderAction& action,
                    std::span<const JammerAction> jam,
                    const RadioParams& params) {
  assert(action.channel >= 0 && action.channel < params.num_channels);
  assert(action.power_index >= 0 &&
         action.power_index < params.num_power_levels());
  double interference = 0.0;
  for (std::size_t j = 0; j < jam.size(); ++j) {
    if (jam[j].channel == action.channel) {
      interference += params.jammer_powers[jam[j].power_index] * params.h_j[j];
    }
  }
  return params.sender_powers[action.power_index] * params.h_s /
         (params.beta + interference);
}

double compute_utility(double sinr, const SenderAction& action,
                       std::span<const JammerAction> jam,
                       const RadioParams& params) {
  const int top = params.num_jammer_levels() - 1;
  int blocking = 0;
  for (const auto& j : jam) {
    if (j.channel == action.channel && j.power_index == top) ++blocking;
  }
  const double hits =
      params.retransmit_cost_per_jammer ? blocking : (blocking > 0 ? 1 : 0);
  return sinr - params.cost_retransmit * hits -
         params.cost_power * params.sender_powers[action.power_index];
}

SlotOutcome make_outcome(const SenderAction& action,
                         std::span<const JammerAction> jam,
                         const RadioParams& params) {
  SlotOutcome out;
  out.sinr = compute_sinr(action, jam, params);
  out.utility = compute_utility(out.sinr, action, jam, params);
  out.hit_flags.resize(jam.size());
  const int top = params.num_jammer_levels() - 1;
  for (std::size_t j = 0; j < jam.size(); ++j) {
    out.hit_flags[j] = jam[j].channel == action.channel;
    if (out.hit_flags[j] && jam[j].power_index == top) out.blocked = true;
  }
  return out;
}

std::vector<JammerAction> jammers_step(std::vector<JammerStrategy>& strategies,
                                       const std::optional<SenderAction>& prev_sender,
                                       const RadioParams& params, Rng& rng) {
  const int n = params.num_channels;
  const int levels = params.num_jammer_levels();
  std::vector<JammerAction> actions;
  actions.reserve(strategies.size());
  for (auto& s : strategies) {
    JammerAction a;
    switch (s.kind) {
      case JammerStrategy::Kind::uniform_random:
        a.channel = rng.uniform_int(n);
        a.power_index = rng.uniform_int(levels);
        break;
      case JammerStrategy::Kind::sweep:
        s.channel = (s.channel + s.stride) % n;
        a.channel = s.channel;
        a.power_index = rng.uniform_int(levels);
        break;
      case JammerStrategy::Kind::fixed:
        a.channel = s.channel;
        a.power_index = s.power_index;
        break;
      case JammerStrategy::Kind::reactive:
        if (prev_sender && rng.uniform() < s.follow_probability) {
          a.channel = prev_sender->channel;
          a.power_index = levels - 1;
        } else {
          a.channel = rng.uniform_int(n);
          a.power_index = rng.uniform_int(levels);
        }
        break;
    }
    actions.push_back(a);
  }
  return actions;
}

StepResult env_step(const SenderAction& action,
                    const std::optional<SenderAction>& prev_action,
                    std::vector<JammerStrategy>& strategies,
                    const RadioParams& params, Rng& rng) {
  StepResult result;
  result.jam = jammers_step(strategies, prev_action, params, rng);
  result.outcome = make_outcome(action, result.jam, params);
  result.next_state = (result.outcome.blocked && params.feedback_zero_when_blocked)
                          ? 0.0
                          : result.outcome.sinr;
  return result;
}

Environment::Environment(RadioParams params,
                         std::vector<JammerStrategy> strategies,
                         std::uint64_t seed)
    : params_(std::move(params)),
      strategies_(std::move(strategies)),
      rng_(seed) {
  params_.validate();
  if (static_cast<int>(strategies_.size()) != params_.num_jammers()) {
    throw std::invalid_argument("Environment: one strategy per jammer required");
  }
  validate_strategies(strategies_, params_);
}

StepResult Environment::step(const SenderAction& action) {
  StepResult result = env_step(action, prev_action_, strategies_, params_, rng_);
  prev_action_ = action;
  return result;
}

}  // namespace jamrl
