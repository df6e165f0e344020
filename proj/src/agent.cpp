#include "jamrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace jamrl {

const char* to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::ql: return "ql";
    case AgentKind::dqn: return "dqn";
    case AgentKind::ddqn: return "ddqn";
    case AgentKind::pddqn: return "pddqn";
  }
  return "?";
}

const char* to_string(PolicyKind kind) {
  return kind == PolicyKind::epsilon_greedy ? "eps" : "tau-eps";
}

const char* to_string(ActionSource source) {
  switch (source) {
    case ActionSource::warmup: return "warmup";
    case ActionSource::repeat: return "repeat";
    case ActionSource::explore: return "explore";
    case ActionSource::greedy: return "greedy";
  }
  return "?";
}

int action_index(const SenderAction& action, int num_power_levels) {
  return action.channel * num_power_levels + action.power_index;
}

SenderAction action_from_index(int index, int num_power_levels) {
  return {index / num_power_levels, index % num_power_levels};
}

void AgentConfig::validate() const {
  if (gamma < 0.0 || gamma >= 1.0)
    throw std::invalid_argument("agent: gamma must be in [0, 1)");
  if (history_window < 1)
    throw std::invalid_argument("agent: history window W must be >= 1");
  if (sync_period < 1)
    throw std::invalid_argument("agent: sync period f must be >= 1");
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::invalid_argument("agent: alpha must be in (0, 1]");
  if (state_bins < 1)
    throw std::invalid_argument("agent: state_bins must be >= 1");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("agent: learning rate must be > 0");
  replay.validate();
}

PhiEncoding PhiEncoding::from(const RadioParams& params) {
  PhiEncoding enc;
  const double ceiling = params.sinr_max();
  enc.sinr_max = ceiling > 0.0 ? ceiling : 1.0;
  enc.num_channels = params.num_channels;
  enc.num_power_levels = params.num_power_levels();
  return enc;
}

HistoryWindow::HistoryWindow(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("HistoryWindow: capacity must be >= 1");
}

void HistoryWindow::push(double state, const SenderAction& action) {
  pairs_.emplace_back(state, action);
  while (static_cast<int>(pairs_.size()) > capacity_) pairs_.pop_front();
}

Tensor build_phi(const HistoryWindow& history, const PhiEncoding& encoding) {
  if (!history.full()) {
    throw std::logic_error("build_phi: history window still filling (warm-up)");
  }
  const int w = history.capacity();
  Tensor phi({w + 1, 3});
  int row = 0;
  for (const auto& [state, action] : history.pairs()) {
    phi.data[row * 3 + 0] = state / encoding.sinr_max;
    phi.data[row * 3 + 1] =
        encoding.num_channels > 1
            ? static_cast<double>(action.channel) / (encoding.num_channels - 1)
            : 0.0;
    phi.data[row * 3 + 2] =
        encoding.num_power_levels > 1
            ? static_cast<double>(action.power_index) / (encoding.num_power_levels - 1)
            : 0.0;
    ++row;
  }
  phi.data[row * 3 + 0] = history.current_state() / encoding.sinr_max;
  phi.data[row * 3 + 1] = -1.0;
  phi.data[row * 3 + 2] = -1.0;
  return phi;
}

std::vector<int> conv_image_shape(int numel) {
  for (int h = static_cast<int>(std::sqrt(static_cast<double>(numel))); h >= 4; --h) {
    if (numel % h == 0) return {1, h, numel / h};
  }
  if (numel >= 13) return {1, 4, (numel + 3) / 4};
  throw std::invalid_argument("conv preset: input too small for the stacked kernels");
}

Tensor as_conv_input(const Tensor& phi, const std::vector<int>& image_shape) {
  Tensor image(image_shape);
  if (image.numel() < phi.numel()) {
    throw std::invalid_argument("as_conv_input: image smaller than the data");
  }
  image.data.head(phi.numel()) = phi.data;
  return image;
}

int sinr_bin(double sinr, double sinr_max, int bins) {
  if (!(sinr_max > 0.0)) return 0;
  const int bin = static_cast<int>(sinr / sinr_max * bins);
  return std::clamp(bin, 0, bins - 1);
}

QTable::QTable(int bins, int channels, int power_levels)
    : bins_(bins),
      channels_(channels),
      powers_(power_levels),
      values_(static_cast<std::size_t>(bins) * channels * power_levels, 0.0) {
  if (bins < 1 || channels < 1 || power_levels < 1) {
    throw std::invalid_argument("QTable: all dimensions must be >= 1");
  }
}

int QTable::index(int bin, int channel, int power) const {
  return (bin * channels_ + channel) * powers_ + power;
}

double QTable::value(int bin, int channel, int power) const {
  return values_[index(bin, channel, power)];
}

double& QTable::value(int bin, int channel, int power) {
  return values_[index(bin, channel, power)];
}

double QTable::max_value(int bin) const {
  double best = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < channels_; ++c) {
    for (int p = 0; p < powers_; ++p) best = std::max(best, value(bin, c, p));
  }
  return best;
}

Eigen::VectorXd QTable::action_values(int bin) const {
  Eigen::VectorXd row(channels_ * powers_);
  for (int c = 0; c < channels_; ++c) {
    for (int p = 0; p < powers_; ++p) {
      row[c * powers_ + p] = value(bin, c, p);
    }
  }
  return row;
}

int compute_amax(const Network& q1, const Tensor& phi_next) {
  return argmax_lowest(q1.forward(phi_next));
}

double compute_target(AgentKind kind, const Network& q1, const Network& q2,
                      double reward, double gamma, const Tensor& phi_next) {
  if (kind == AgentKind::ql) {
    throw std::logic_error("compute_target: tabular agents have no networks");
  }
  const Eigen::VectorXd q2_values = q2.forward(phi_next);
  if (kind == AgentKind::dqn) {
    return reward + gamma * q2_values.maxCoeff();
  }
  return reward + gamma * q2_values[compute_amax(q1, phi_next)];
}

double td_error(double target, const Network& q1, const Tensor& phi,
                int action_index) {
  return target - q1.forward(phi)[action_index];
}

void tabular_update(QTable& table, int state_bin, const SenderAction& action,
                    double reward, int next_state_bin, double alpha,
                    double gamma) {
  double& q = table.value(state_bin, action.channel, action.power_index);
  q = (1.0 - alpha) * q + alpha * (reward + gamma * table.max_value(next_state_bin));
}

bool sync_target(Network& q2, const Network& q1, long slot, int period) {
  if (period == 1 || slot % period == 1) {
    copy_from(q2, q1);
    return true;
  }
  return false;
}

LearnStep learn_from_batch(Network& q1, const Network& q2, AgentKind kind,
                           double gamma, double learning_rate,
                           std::span<const Experience* const> batch,
                           std::span<const double> probabilities, double lambda,
                           int num_power_levels) {
  const std::size_t m = batch.size();
  std::vector<Tensor> inputs;
  std::vector<int> actions;
  std::vector<double> targets;
  inputs.reserve(m);
  actions.reserve(m);
  targets.reserve(m);
  for (const Experience* e : batch) {
    inputs.push_back(e->phi);
    actions.push_back(action_index(e->action, num_power_levels));
    targets.push_back(compute_target(kind, q1, q2, e->reward, gamma, e->phi_next));
  }
  const std::vector<double> weights = importance_weights(probabilities, m, lambda);
  LossResult result = loss_and_grad(q1, inputs, actions, targets, weights);
  sgd_step(q1, result.gradients, learning_rate);
  return {result.loss, std::move(result.td_errors)};
}

Agent::Agent(AgentConfig cfg, PolicyState policy, const RadioParams& radio,
             std::uint64_t seed)
    : cfg_(std::move(cfg)),
      policy_(std::move(policy)),
      radio_(radio),
      rng_(0),
      history_(cfg_.history_window),
      last_loss_(std::numeric_limits<double>::quiet_NaN()) {
  cfg_.validate();
  policy_.validate();
  radio_.validate();
  encoding_ = PhiEncoding::from(radio_);

  // Independent sub-streams: parameter init must not shift the action draws.
  std::uint64_t state = seed;
  Rng init_rng(splitmix64(state));
  rng_ = Rng(splitmix64(state));

  if (cfg_.kind == AgentKind::ql) {
    table_ = std::make_unique<QTable>(cfg_.state_bins, radio_.num_channels,
                                      radio_.num_power_levels());
    return;
  }
  const int actions = radio_.num_channels * radio_.num_power_levels();
  std::vector<int> input_shape;
  std::vector<LayerSpec> layers;
  if (cfg_.net_preset == NetPreset::mlp) {
    input_shape = {3 * (cfg_.history_window + 1)};
    layers = mlp_layers(actions);
  } else {
    image_shape_ = conv_image_shape(3 * (cfg_.history_window + 1));
    input_shape = image_shape_;
    layers = paper_cnn_layers(actions);
  }
  q1_ = std::make_unique<Network>(layers, input_shape, init_rng);
  q2_ = std::make_unique<Network>(*q1_);
  replay_ = std::make_unique<SumTree>(cfg_.replay.capacity);
}

Tensor Agent::net_input(const Tensor& phi) const {
  if (cfg_.net_preset == NetPreset::paper_cnn) {
    return as_conv_input(phi, image_shape_);
  }
  return phi;
}

void Agent::refresh_all_priorities() {
  std::vector<std::size_t> leaves(replay_->size());
  std::vector<double> psis(replay_->size());
  for (std::size_t i = 0; i < replay_->size(); ++i) {
    const Experience& e = replay_->experience(i);
    const double target =
        compute_target(cfg_.kind, *q1_, *q2_, e.reward, cfg_.gamma, e.phi_next);
    leaves[i] = i;
    psis[i] = td_error(target, *q1_, e.phi,
                       action_index(e.action, radio_.num_power_levels()));
  }
  update_priorities(*replay_, leaves, psis, cfg_.replay.priority_floor);
}

SlotRecord Agent::step(Environment& env) {
  ++slot_;
  const double state = history_.current_state();
  const bool warmup = slot_ <= cfg_.history_window;

  SenderAction action;
  ActionSource source = ActionSource::warmup;
  std::optional<Tensor> phi_now;

  if (warmup) {
    action.channel = rng_.uniform_int(radio_.num_channels);
    action.power_index = rng_.uniform_int(radio_.num_power_levels());
  } else {
    Eigen::VectorXd q;
    if (cfg_.kind == AgentKind::ql) {
      q = table_->action_values(sinr_bin(state, encoding_.sinr_max, cfg_.state_bins));
    } else {
      phi_now = net_input(build_phi(history_, encoding_));
      q = q1_->forward(*phi_now);
    }
    const SelectResult sel = select_action(q, prev_action_index_, policy_, rng_);
    action = action_from_index(sel.action, radio_.num_power_levels());
    switch (sel.branch) {
      case Branch::repeat: source = ActionSource::repeat; break;
      case Branch::explore: source = ActionSource::explore; break;
      case Branch::greedy: source = ActionSource::greedy; break;
    }
  }

  const StepResult result = env.step(action);
  const double utility = result.outcome.utility;

  if (cfg_.policy_kind == PolicyKind::tau_epsilon_greedy) {
    if (warmup) {
      record_utility(policy_, utility);  // seeds the dynamic threshold
    } else {
      update_tau(utility, policy_);
    }
  }
  if (!warmup) decay_epsilon(policy_);

  if (cfg_.kind == AgentKind::ql) {
    if (!warmup) {
      const int bin = sinr_bin(state, encoding_.sinr_max, cfg_.state_bins);
      const int next_bin =
          sinr_bin(result.next_state, encoding_.sinr_max, cfg_.state_bins);
      tabular_update(*table_, bin, action, utility, next_bin, cfg_.alpha,
                     cfg_.gamma);
    }
    history_.push(state, action);
    history_.set_current_state(result.next_state);
  } else {
    const bool had_phi = history_.full();
    Tensor phi_k;
    if (had_phi) {
      phi_k = phi_now ? std::move(*phi_now) : net_input(build_phi(history_, encoding_));
    }
    history_.push(state, action);
    history_.set_current_state(result.next_state);
    if (had_phi) {
      Tensor phi_next = net_input(build_phi(history_, encoding_));
      replay_->push(Experience{std::move(phi_k), std::move(phi_next), action, utility});
    }
    if (!warmup && replay_->size() >= cfg_.replay.batch_size) {
      const SampledBatch batch = sample_batch(*replay_, cfg_.replay, rng_);
      std::vector<const Experience*> items;
      items.reserve(batch.leaves.size());
      for (std::size_t leaf : batch.leaves) items.push_back(&replay_->experience(leaf));
      const LearnStep learned = learn_from_batch(
          *q1_, *q2_, cfg_.kind, cfg_.gamma, cfg_.learning_rate, items,
          batch.probabilities, cfg_.replay.lambda, radio_.num_power_levels());
      last_loss_ = learned.loss;
      if (cfg_.replay.selection != ReplayConfig::Selection::uniform) {
        if (cfg_.replay.full_priority_refresh) {
          refresh_all_priorities();
        } else {
          update_priorities(*replay_, batch.leaves, learned.td_errors,
                            cfg_.replay.priority_floor);
        }
      }
    }
    sync_target(*q2_, *q1_, slot_, cfg_.sync_period);
  }

  prev_action_index_ = action_index(action, radio_.num_power_levels());

  SlotRecord record;
  record.slot = slot_;
  record.sinr = result.outcome.sinr;
  record.utility = utility;
  record.tau = policy_.tau;
  record.epsilon = policy_.epsilon;
  record.channel = action.channel;
  record.power_index = action.power_index;
  record.blocked = result.outcome.blocked;
  record.source = source;
  record.jam = result.jam;
  return record;
}

namespace {

void write_scalar(std::ostream& out, const char* name, double value) {
  out << name << ' ' << std::hexfloat << value << std::defaultfloat << '\n';
}

double read_scalar(std::istream& in, const char* name) {
  std::string token;
  if (!(in >> token) || token != name) {
    throw std::runtime_error(std::string("checkpoint: expected '") + name + "'");
  }
  if (!(in >> token)) throw std::runtime_error("checkpoint: truncated value");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str()) throw std::runtime_error("checkpoint: bad value");
  return v;
}

}  // namespace

void Agent::save_checkpoint(std::ostream& out) const {
  out << "jamrl-agent-v1\n";
  out << "kind " << to_string(cfg_.kind) << '\n';
  out << "slot " << slot_ << '\n';
  write_scalar(out, "tau", policy_.tau);
  write_scalar(out, "epsilon", policy_.epsilon);
  if (cfg_.kind == AgentKind::ql) {
    out << "table " << table_->bins() << ' ' << table_->channels() << ' '
        << table_->power_levels() << '\n';
    out << std::hexfloat;
    for (int b = 0; b < table_->bins(); ++b) {
      for (int c = 0; c < table_->channels(); ++c) {
        for (int p = 0; p < table_->power_levels(); ++p) {
          out << table_->value(b, c, p) << ' ';
        }
      }
      out << '\n';
    }
    out << std::defaultfloat;
  } else {
    save_network(*q1_, out);
    save_network(*q2_, out);
  }
}

void Agent::load_checkpoint(std::istream& in) {
  std::string token;
  if (!(in >> token) || token != "jamrl-agent-v1") {
    throw std::runtime_error("checkpoint: bad magic");
  }
  if (!(in >> token) || token != "kind") throw std::runtime_error("checkpoint: expected kind");
  in >> token;
  if (token != to_string(cfg_.kind)) {
    throw std::runtime_error("checkpoint: agent kind mismatch (" + token + ")");
  }
  if (!(in >> token) || token != "slot") throw std::runtime_error("checkpoint: expected slot");
  in >> slot_;
  policy_.tau = read_scalar(in, "tau");
  policy_.epsilon = read_scalar(in, "epsilon");
  if (cfg_.kind == AgentKind::ql) {
    if (!(in >> token) || token != "table") throw std::runtime_error("checkpoint: expected table");
    int bins, channels, powers;
    in >> bins >> channels >> powers;
    if (bins != table_->bins() || channels != table_->channels() ||
        powers != table_->power_levels()) {
      throw std::runtime_error("checkpoint: table shape mismatch");
    }
    for (int b = 0; b < bins; ++b) {
      for (int c = 0; c < channels; ++c) {
        for (int p = 0; p < powers; ++p) {
          if (!(in >> token)) throw std::runtime_error("checkpoint: truncated table");
          char* end = nullptr;
          table_->value(b, c, p) = std::strtod(token.c_str(), &end);
          if (end == token.c_str()) throw std::runtime_error("checkpoint: bad table value");
        }
      }
    }
  } else {
    Network q1 = load_network(in);
    Network q2 = load_network(in);
    copy_from(*q1_, q1);
    copy_from(*q2_, q2);
  }
}

}  // namespace jamrl
