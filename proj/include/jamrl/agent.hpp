#pragma once

#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "jamrl/network.hpp"
#include "jamrl/policy.hpp"
#include "jamrl/radio.hpp"
#include "jamrl/replay.hpp"

namespace jamrl {

enum class AgentKind { ql, dqn, ddqn, pddqn };
enum class PolicyKind { epsilon_greedy, tau_epsilon_greedy };
enum class NetPreset { mlp, paper_cnn };

const char* to_string(AgentKind kind);
const char* to_string(PolicyKind kind);

/// Flat action index: actions are grouped by channel, power fastest.
int action_index(const SenderAction& action, int num_power_levels);
SenderAction action_from_index(int index, int num_power_levels);

struct AgentConfig {
  AgentKind kind = AgentKind::pddqn;
  PolicyKind policy_kind = PolicyKind::tau_epsilon_greedy;
  double gamma = 0.6;
  int history_window = 32;  // W: slots of random warm-up and phi depth
  int sync_period = 10;     // f: target refresh period in slots
  double alpha = 0.1;       // tabular learning rate
  int state_bins = 20;      // tabular SINR discretisation
  NetPreset net_preset = NetPreset::mlp;
  // Plain SGD step size. 1e-3 leaves the nets visibly undertrained within a
  // 400-slot run and 2e-2 can diverge; 1e-2 is stable across thousands of
  // seeded runs.
  double learning_rate = 1e-2;
  ReplayConfig replay;

  void validate() const;
};

/// Normalisation constants for the network input encoding.
struct PhiEncoding {
  double sinr_max = 1.0;
  int num_channels = 1;
  int num_power_levels = 1;

  static PhiEncoding from(const RadioParams& params);
};

/// The previous W (state, action) pairs plus the current state; states are
/// linear SINR values.
class HistoryWindow {
 public:
  explicit HistoryWindow(int capacity);

  /// Append a pair, evicting the oldest past capacity.
  void push(double state, const SenderAction& action);
  void set_current_state(double state) { current_ = state; }
  double current_state() const { return current_; }
  bool full() const { return static_cast<int>(pairs_.size()) == capacity_; }
  int capacity() const { return capacity_; }
  const std::deque<std::pair<double, SenderAction>>& pairs() const {
    return pairs_;
  }

 private:
  int capacity_;
  std::deque<std::pair<double, SenderAction>> pairs_;
  double current_ = 0.0;
};

/// Encode the window as a (W+1) x 3 matrix: one row per past pair holding
/// [sinr / sinr_max, channel / (N-1), power / (S-1)], final row the current
/// state with -1 sentinels in the action columns. Throws while the window is
/// still filling.
Tensor build_phi(const HistoryWindow& history, const PhiEncoding& encoding);

/// 1-channel near-square arrangement of a flat value count for the conv
/// preset; pads with zeros when no usable factorisation exists.
std::vector<int> conv_image_shape(int numel);
Tensor as_conv_input(const Tensor& phi, const std::vector<int>& image_shape);

/// Equal-width SINR bin over [0, sinr_max], clamped to the edge bins.
int sinr_bin(double sinr, double sinr_max, int bins);

/// Dense tabular Q over (state bin, channel, power), zero-initialised.
class QTable {
 public:
  QTable(int bins, int channels, int power_levels);

  double value(int bin, int channel, int power) const;
  double& value(int bin, int channel, int power);
  double max_value(int bin) const;
  /// Row over the flat action set, in action_index order.
  Eigen::VectorXd action_values(int bin) const;

  int bins() const { return bins_; }
  int channels() const { return channels_; }
  int power_levels() const { return powers_; }

 private:
  int index(int bin, int channel, int power) const;
  int bins_, channels_, powers_;
  std::vector<double> values_;
};

/// Greedy action under q1 at the successor input, ties to the lowest index.
int compute_amax(const Network& q1, const Tensor& phi_next);

/// Bootstrapped target: double estimator (argmax by q1, value by q2) for
/// DDQN/PDDQN, plain max over q2 for DQN. This task has no terminal states.
double compute_target(AgentKind kind, const Network& q1, const Network& q2,
                      double reward, double gamma, const Tensor& phi_next);

/// psi = target - Q1(phi)[action].
double td_error(double target, const Network& q1, const Tensor& phi,
                int action_index);

/// Q(s,a) <- (1-alpha) Q(s,a) + alpha (reward + gamma max_a' Q(s',a')).
void tabular_update(QTable& table, int state_bin, const SenderAction& action,
                    double reward, int next_state_bin, double alpha,
                    double gamma);

/// Copy q1 into q2 when the slot hits the sync schedule (slot % f == 1, with
/// f == 1 syncing every slot). Returns whether a copy happened.
bool sync_target(Network& q2, const Network& q1, long slot, int period);

struct LearnStep {
  double loss = 0.0;
  std::vector<double> td_errors;
};

/// One minibatch descent on q1: targets from q2 (and q1's argmax for the
/// double estimator), importance weights from the sampling probabilities,
/// weighted squared-TD loss, one SGD step.
LearnStep learn_from_batch(Network& q1, const Network& q2, AgentKind kind,
                           double gamma, double learning_rate,
                           std::span<const Experience* const> batch,
                           std::span<const double> probabilities, double lambda,
                           int num_power_levels);

enum class ActionSource { warmup, repeat, explore, greedy };
const char* to_string(ActionSource source);

/// Everything the harness needs to log for one slot.
struct SlotRecord {
  long slot = 0;
  double sinr = 0.0;
  double utility = 0.0;
  double tau = 0.0;
  double epsilon = 0.0;
  int channel = 0;
  int power_index = 0;
  bool blocked = false;
  ActionSource source = ActionSource::warmup;
  std::vector<JammerAction> jam;
  bool operator==(const SlotRecord&) const = default;
};

/// One learner wired to one policy. The first W slots act uniformly at
/// random to fill the history window; afterwards every slot selects, steps,
/// stores and (once the buffer holds a batch) learns.
class Agent {
 public:
  Agent(AgentConfig cfg, PolicyState policy, const RadioParams& radio,
        std::uint64_t seed);

  SlotRecord step(Environment& env);

  long slot() const { return slot_; }
  const AgentConfig& config() const { return cfg_; }
  const PolicyState& policy() const { return policy_; }
  const HistoryWindow& history() const { return history_; }
  bool is_deep() const { return cfg_.kind != AgentKind::ql; }
  Network* online_network() { return q1_.get(); }
  Network* target_network() { return q2_.get(); }
  QTable* table() { return table_.get(); }
  SumTree* replay() { return replay_.get(); }
  /// Loss of the most recent minibatch update; NaN before any learning.
  double last_loss() const { return last_loss_; }

  void save_checkpoint(std::ostream& out) const;
  void load_checkpoint(std::istream& in);

 private:
  Tensor net_input(const Tensor& phi) const;
  void refresh_all_priorities();

  AgentConfig cfg_;
  PolicyState policy_;
  RadioParams radio_;
  PhiEncoding encoding_;
  Rng rng_;
  long slot_ = 0;
  HistoryWindow history_;
  std::optional<int> prev_action_index_;
  std::vector<int> image_shape_;  // conv preset only
  std::unique_ptr<Network> q1_, q2_;
  std::unique_ptr<SumTree> replay_;
  std::unique_ptr<QTable> table_;
  double last_loss_;
};

}  // namespace jamrl
