#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jamrl/rng.hpp"

namespace jamrl {

/// Physical and cost constants of the wireless game.
///
/// The sender picks one of `sender_powers` on one of `num_channels`; each
/// jammer picks one of `jammer_powers` on some channel. A slot is blocked
/// when an on-channel jammer transmits at the top power level.
struct RadioParams {
  int num_channels = 32;
  std::vector<double> sender_powers{1.0, 5.0, 10.0};
  std::vector<double> jammer_powers{0.0, 4.0, 8.0, 10.0};
  double h_s = 0.5;                 // sender-to-receiver channel gain
  std::vector<double> h_j{0.5, 0.5};  // per-jammer gain, size J
  double beta = 1.0;                // receiver noise power, watts
  double cost_retransmit = 1.0;     // C_m
  double cost_power = 0.2;          // C_s, per watt
  // Charge C_m once per blocked slot (default) or once per blocking jammer.
  bool retransmit_cost_per_jammer = false;
  // Feed back 0 instead of the interference-laden SINR when blocked.
  bool feedback_zero_when_blocked = false;

  int num_jammers() const { return static_cast<int>(h_j.size()); }
  int num_power_levels() const { return static_cast<int>(sender_powers.size()); }
  int num_jammer_levels() const { return static_cast<int>(jammer_powers.size()); }

  /// Analytic SINR ceiling: max sender power over noise alone.
  double sinr_max() const;

  /// Throws std::invalid_argument describing every violated invariant.
  void validate() const;
};

struct SenderAction {
  int channel = 0;
  int power_index = 0;
  bool operator==(const SenderAction&) const = default;
};

struct JammerAction {
  int channel = 0;
  int power_index = 0;
  bool operator==(const JammerAction&) const = default;
};

/// Result of one transmission slot.
struct SlotOutcome {
  double sinr = 0.0;
  double utility = 0.0;
  bool blocked = false;
  std::vector<bool> hit_flags;  // jammer j on the sender's channel
};

/// How a scripted jammer picks its action each slot. Four behaviours cover
/// the usual robustness suspects.
struct JammerStrategy {
  enum class Kind { uniform_random, sweep, fixed, reactive };
  Kind kind = Kind::uniform_random;
  int stride = 1;                  // sweep: channel increment per slot
  int channel = 0;                 // fixed constant / sweep cursor
  int power_index = 0;             // fixed constant
  double follow_probability = 1.0; // reactive: chance of chasing the sender

  static JammerStrategy uniform_random();
  static JammerStrategy sweep(int stride, int start_channel = 0);
  static JammerStrategy fixed(int channel, int power_index);
  static JammerStrategy reactive(double follow_probability);
};

/// Range checks for a strategy set against the game's channel and power
/// counts: sweep stride in [1, N), fixed indices in range, follow
/// probability in [0, 1]. Throws std::invalid_argument.
void validate_strategies(std::span<const JammerStrategy> strategies,
                         const RadioParams& params);

/// Linear-scale SINR of the sender's transmission against the given jamming
/// pattern: P_s h_s / (beta + sum of on-channel jamming power times gain).
double compute_sinr(const SenderAction& action,
                    std::span<const JammerAction> jam,
                    const RadioParams& params);

/// Per-slot utility: SINR minus retransmission cost (when blocked) minus the
/// power cost of the chosen transmit level.
double compute_utility(double sinr, const SenderAction& action,
                       std::span<const JammerAction> jam,
                       const RadioParams& params);

/// Full outcome record for one slot; utility and flags derive from the same
/// jamming pattern so the record stays self-consistent.
SlotOutcome make_outcome(const SenderAction& action,
                         std::span<const JammerAction> jam,
                         const RadioParams& params);

/// Advance every jammer one slot. `prev_sender` is the action of the previous
/// slot (reactive jammers chase it; nullopt falls back to uniform).
std::vector<JammerAction> jammers_step(std::vector<JammerStrategy>& strategies,
                                       const std::optional<SenderAction>& prev_sender,
                                       const RadioParams& params, Rng& rng);

struct StepResult {
  SlotOutcome outcome;
  double next_state = 0.0;          // SINR fed back to the sender
  std::vector<JammerAction> jam;    // logged for trace audits
};

/// One slot of the game: jammers move, the outcome is scored, and the SINR
/// becomes the sender's next state.
StepResult env_step(const SenderAction& action,
                    const std::optional<SenderAction>& prev_action,
                    std::vector<JammerStrategy>& strategies,
                    const RadioParams& params, Rng& rng);

/// Stateful wrapper bundling params, jammer strategies, the previous sender
/// action and a seeded stream. One instance per run; no shared state.
class Environment {
 public:
  Environment(RadioParams params, std::vector<JammerStrategy> strategies,
              std::uint64_t seed);

  StepResult step(const SenderAction& action);

  const RadioParams& params() const { return params_; }

 private:
  RadioParams params_;
  std::vector<JammerStrategy> strategies_;
  std::optional<SenderAction> prev_action_;
  Rng rng_;
};

}  // namespace jamrl
