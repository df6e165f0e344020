#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "jamrl/harness.hpp"

namespace jamrl {

/// Flat `key = value` text with `#` comments; later keys override earlier
/// ones. The full key table lives in the README.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in);

/// Jammer spec list, e.g. "uniform, sweep:1, fixed:3:2, reactive:0.8".
std::vector<JammerStrategy> parse_jammers(const std::string& value);

/// Builds an ExperimentConfig from defaults plus key-value overrides (file
/// and/or command line, applied in order).
class ConfigLoader {
 public:
  /// Throws std::invalid_argument on an unknown key or unparsable value.
  void apply(const std::string& key, const std::string& value);
  void apply_file(std::istream& in);

  /// Finish resolving: agents other than PDDQN default to the uniform buffer
  /// unless `selection` was set explicitly. Does not validate.
  ExperimentConfig finish() const;

 private:
  ExperimentConfig config_;
  bool selection_set_ = false;
};

const char* to_string(ReplayConfig::Selection selection);
AgentKind parse_agent_kind(const std::string& value);
PolicyKind parse_policy_kind(const std::string& value);
NetPreset parse_net_preset(const std::string& value);

}  // namespace jamrl
