#include "jamrl/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace jamrl {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') {
    throw std::invalid_argument("config: bad number for '" + key + "': " + value);
  }
  return v;
}

long parse_long(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long v = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') {
    throw std::invalid_argument("config: bad integer for '" + key + "': " + value);
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "': " + value);
}

std::vector<std::string> split_list(const std::string& value, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : value) {
    if (c == sep) {
      parts.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  const std::string last = trim(current);
  if (!last.empty() || !parts.empty()) parts.push_back(last);
  return parts;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& part : split_list(value, ',')) {
    out.push_back(parse_double(key, part));
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    }
    entries.emplace_back(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
  }
  return entries;
}

std::vector<JammerStrategy> parse_jammers(const std::string& value) {
  std::vector<JammerStrategy> strategies;
  for (const auto& spec : split_list(value, ',')) {
    const auto parts = split_list(spec, ':');
    const std::string& kind = parts.at(0);
    if (kind == "uniform") {
      strategies.push_back(JammerStrategy::uniform_random());
    } else if (kind == "sweep") {
      const int stride = parts.size() > 1 ? static_cast<int>(parse_long("sweep", parts[1])) : 1;
      const int start = parts.size() > 2 ? static_cast<int>(parse_long("sweep", parts[2])) : 0;
      strategies.push_back(JammerStrategy::sweep(stride, start));
    } else if (kind == "fixed") {
      if (parts.size() != 3) {
        throw std::invalid_argument("config: fixed jammer needs fixed:<channel>:<power>");
      }
      strategies.push_back(JammerStrategy::fixed(
          static_cast<int>(parse_long("fixed", parts[1])),
          static_cast<int>(parse_long("fixed", parts[2]))));
    } else if (kind == "reactive") {
      const double prob = parts.size() > 1 ? parse_double("reactive", parts[1]) : 1.0;
      strategies.push_back(JammerStrategy::reactive(prob));
    } else {
      throw std::invalid_argument("config: unknown jammer strategy '" + kind + "'");
    }
  }
  if (strategies.empty()) {
    throw std::invalid_argument("config: jammers list must not be empty");
  }
  return strategies;
}

const char* to_string(ReplayConfig::Selection selection) {
  switch (selection) {
    case ReplayConfig::Selection::proportional_stratified: return "proportional";
    case ReplayConfig::Selection::top_m: return "top_m";
    case ReplayConfig::Selection::uniform: return "uniform";
  }
  return "?";
}

AgentKind parse_agent_kind(const std::string& value) {
  if (value == "ql") return AgentKind::ql;
  if (value == "dqn") return AgentKind::dqn;
  if (value == "ddqn") return AgentKind::ddqn;
  if (value == "pddqn") return AgentKind::pddqn;
  throw std::invalid_argument("config: unknown agent '" + value + "'");
}

PolicyKind parse_policy_kind(const std::string& value) {
  if (value == "eps") return PolicyKind::epsilon_greedy;
  if (value == "tau-eps") return PolicyKind::tau_epsilon_greedy;
  throw std::invalid_argument("config: unknown policy '" + value + "'");
}

NetPreset parse_net_preset(const std::string& value) {
  if (value == "mlp") return NetPreset::mlp;
  if (value == "paper-cnn") return NetPreset::paper_cnn;
  throw std::invalid_argument("config: unknown net preset '" + value + "'");
}

void ConfigLoader::apply(const std::string& key, const std::string& value) {
  auto& c = config_;
  if (key == "num_channels") {
    c.radio.num_channels = static_cast<int>(parse_long(key, value));
  } else if (key == "sender_powers") {
    c.radio.sender_powers = parse_double_list(key, value);
  } else if (key == "jammer_powers") {
    c.radio.jammer_powers = parse_double_list(key, value);
  } else if (key == "h_s") {
    c.radio.h_s = parse_double(key, value);
  } else if (key == "h_j") {
    c.radio.h_j = parse_double_list(key, value);
  } else if (key == "beta") {
    c.radio.beta = parse_double(key, value);
  } else if (key == "cost_retransmit") {
    c.radio.cost_retransmit = parse_double(key, value);
  } else if (key == "cost_power") {
    c.radio.cost_power = parse_double(key, value);
  } else if (key == "retransmit_cost_per_jammer") {
    c.radio.retransmit_cost_per_jammer = parse_bool(key, value);
  } else if (key == "feedback_zero_when_blocked") {
    c.radio.feedback_zero_when_blocked = parse_bool(key, value);
  } else if (key == "jammers") {
    c.jammers = parse_jammers(value);
  } else if (key == "agent") {
    c.agent.kind = parse_agent_kind(value);
  } else if (key == "policy") {
    c.agent.policy_kind = parse_policy_kind(value);
  } else if (key == "gamma") {
    c.agent.gamma = parse_double(key, value);
  } else if (key == "history_window") {
    c.agent.history_window = static_cast<int>(parse_long(key, value));
  } else if (key == "sync_period") {
    c.agent.sync_period = static_cast<int>(parse_long(key, value));
  } else if (key == "alpha") {
    c.agent.alpha = parse_double(key, value);
  } else if (key == "state_bins") {
    c.agent.state_bins = static_cast<int>(parse_long(key, value));
  } else if (key == "net") {
    c.agent.net_preset = parse_net_preset(value);
  } else if (key == "learning_rate") {
    c.agent.learning_rate = parse_double(key, value);
  } else if (key == "replay_capacity") {
    c.agent.replay.capacity = static_cast<std::size_t>(parse_long(key, value));
  } else if (key == "batch_size") {
    c.agent.replay.batch_size = static_cast<std::size_t>(parse_long(key, value));
  } else if (key == "lambda") {
    c.agent.replay.lambda = parse_double(key, value);
  } else if (key == "priority_floor") {
    c.agent.replay.priority_floor = parse_double(key, value);
  } else if (key == "selection") {
    if (value == "proportional") {
      c.agent.replay.selection = ReplayConfig::Selection::proportional_stratified;
    } else if (value == "top_m") {
      c.agent.replay.selection = ReplayConfig::Selection::top_m;
    } else if (value == "uniform") {
      c.agent.replay.selection = ReplayConfig::Selection::uniform;
    } else {
      throw std::invalid_argument("config: unknown selection '" + value + "'");
    }
    selection_set_ = true;
  } else if (key == "full_priority_refresh") {
    c.agent.replay.full_priority_refresh = parse_bool(key, value);
  } else if (key == "tau") {
    c.policy.tau = parse_double(key, value);
  } else if (key == "epsilon") {
    c.policy.epsilon = parse_double(key, value);
  } else if (key == "sigma1") {
    c.policy.sigma1 = parse_double(key, value);
  } else if (key == "sigma2") {
    c.policy.sigma2 = parse_double(key, value);
  } else if (key == "epsilon_decay") {
    c.policy.epsilon_decay = parse_double(key, value);
  } else if (key == "epsilon_min") {
    c.policy.epsilon_min = parse_double(key, value);
  } else if (key == "utility_window") {
    c.policy.window_capacity = static_cast<std::size_t>(parse_long(key, value));
  } else if (key == "paper_literal_tau") {
    c.policy.paper_literal_tau = parse_bool(key, value);
  } else if (key == "slots") {
    c.slots = static_cast<int>(parse_long(key, value));
  } else if (key == "seeds") {
    c.seeds.clear();
    for (const auto& part : split_list(value, ',')) {
      c.seeds.push_back(static_cast<std::uint64_t>(parse_long(key, part)));
    }
  } else if (key == "out_dir") {
    c.out_dir = value;
  } else if (key == "constant_power_index") {
    c.constant_power_index = static_cast<int>(parse_long(key, value));
  } else if (key == "smoothing_window") {
    c.smoothing_window = static_cast<int>(parse_long(key, value));
  } else if (key == "convergence_window") {
    c.convergence_window = static_cast<int>(parse_long(key, value));
  } else if (key == "convergence_fraction") {
    c.convergence_fraction = parse_double(key, value);
  } else if (key == "final_window") {
    c.final_window = static_cast<int>(parse_long(key, value));
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

void ConfigLoader::apply_file(std::istream& in) {
  for (const auto& [key, value] : parse_key_values(in)) {
    apply(key, value);
  }
}

ExperimentConfig ConfigLoader::finish() const {
  ExperimentConfig out = config_;
  if (!selection_set_ && out.agent.kind != AgentKind::pddqn) {
    out.agent.replay.selection = ReplayConfig::Selection::uniform;
  }
  return out;
}

}  // namespace jamrl
