// Command-line front end: single runs, multi-config comparisons and
// one-parameter sweeps over the anti-jamming RL testbed.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "jamrl/config.hpp"
#include "jamrl/harness.hpp"

namespace fs = std::filesystem;
using namespace jamrl;

namespace {

struct CommonOpts {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> seed_count;
  std::optional<int> slots;
  std::optional<std::string> out;
  std::optional<std::string> agent;
  std::optional<std::string> policy;
  std::optional<std::string> net;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_file, "config file (key = value lines)");
  cmd->add_option("--seed", opts.seed, "run seed");
  cmd->add_option("--seeds", opts.seed_count, "use seeds 1..n");
  cmd->add_option("--slots", opts.slots, "time slots per run");
  cmd->add_option("--out", opts.out, "output directory");
  cmd->add_option("--agent", opts.agent, "ql|dqn|ddqn|pddqn");
  cmd->add_option("--policy", opts.policy, "eps|tau-eps");
  cmd->add_option("--net", opts.net, "mlp|paper-cnn");
}

ConfigLoader make_loader(const CommonOpts& opts) {
  ConfigLoader loader;
  if (!opts.config_file.empty()) {
    std::ifstream in(opts.config_file);
    if (!in) throw std::runtime_error("cannot open config file: " + opts.config_file);
    loader.apply_file(in);
  }
  if (opts.slots) loader.apply("slots", std::to_string(*opts.slots));
  if (opts.out) loader.apply("out_dir", *opts.out);
  if (opts.agent) loader.apply("agent", *opts.agent);
  if (opts.policy) loader.apply("policy", *opts.policy);
  if (opts.net) loader.apply("net", *opts.net);
  return loader;
}

std::vector<std::uint64_t> resolve_seeds(const CommonOpts& opts,
                                         const ExperimentConfig& config) {
  if (opts.seed_count) {
    std::vector<std::uint64_t> seeds;
    for (int i = 1; i <= *opts.seed_count; ++i) seeds.push_back(i);
    return seeds;
  }
  if (opts.seed) return {*opts.seed};
  return config.seeds;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void print_summary(const CompareResult& result) {
  std::cout << "config                    final SINR (mean+-std)   median conv. slot   avg power W\n";
  for (const auto& c : result.configs) {
    std::printf("%-25s %8.4f +- %-10.4f %10.1f %16.3f\n", c.name.c_str(),
                c.final_mean, c.final_std, c.median_convergence,
                c.mean_avg_power);
  }
}

void emit_compare_outputs(const CompareResult& result, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "curves.csv");
    write_curves_csv(result, out);
  }
  {
    std::ofstream out(fs::path(out_dir) / "summary.csv");
    write_summary_csv(result, out);
  }
  {
    std::ofstream out(fs::path(out_dir) / "curves.svg");
    write_curves_svg(result, out);
  }
  std::cout << "wrote " << out_dir << "/curves.csv, summary.csv, curves.svg\n";
}

int cmd_run(const CommonOpts& opts) {
  const ExperimentConfig config = make_loader(opts).finish();
  const std::uint64_t seed = opts.seed ? *opts.seed
                             : config.seeds.empty() ? 1
                                                    : config.seeds.front();
  const RunTrace trace = run(config, seed);
  fs::create_directories(config.out_dir);
  const std::string name = std::string(to_string(config.agent.kind)) + "-" +
                           to_string(config.agent.policy_kind) + "_seed" +
                           std::to_string(seed);
  const fs::path path = fs::path(config.out_dir) / ("trace_" + name + ".csv");
  {
    std::ofstream out(path);
    write_trace_csv(trace, out);
  }
  const auto series = sinr_series(trace);
  const int fw = std::min<int>(config.final_window, config.slots);
  const double final_mean = mean(std::span<const double>(series).last(fw));
  const auto conv = convergence_slot(series, config.convergence_fraction,
                                     config.convergence_window);
  std::cout << "trace: " << path.string() << '\n';
  std::cout << "final-" << fw << "-slot mean SINR: " << final_mean << '\n';
  std::cout << "average power: " << average_power(trace, effective_radio(config))
            << " W\n";
  if (conv) {
    std::cout << "convergence slot: " << *conv << '\n';
  } else {
    std::cout << "convergence slot: none\n";
  }
  return 0;
}

int cmd_compare(const CommonOpts& opts, const std::string& agents,
                const std::string& policies) {
  const ConfigLoader base = make_loader(opts);
  const ExperimentConfig base_config = base.finish();
  std::vector<NamedConfig> configs;
  for (const auto& agent : split_csv(agents)) {
    for (const auto& policy : split_csv(policies)) {
      ConfigLoader loader = base;
      loader.apply("agent", agent);
      loader.apply("policy", policy);
      std::string name = agent;
      if (split_csv(policies).size() > 1) name += "-" + policy;
      configs.push_back({name, loader.finish()});
    }
  }
  if (configs.size() < 2) {
    std::cerr << "compare: need at least two configs (use --agents/--policies)\n";
    return 1;
  }
  const auto seeds = resolve_seeds(opts, base_config);
  const CompareResult result = compare(configs, seeds);
  print_summary(result);
  emit_compare_outputs(result, base_config.out_dir);
  return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& param,
              const std::string& values) {
  const ConfigLoader base = make_loader(opts);
  const ExperimentConfig base_config = base.finish();
  std::vector<NamedConfig> configs;
  for (const auto& value : split_csv(values)) {
    ConfigLoader loader = base;
    loader.apply(param, value);
    configs.push_back({param + "=" + value, loader.finish()});
  }
  if (configs.size() < 2) {
    std::cerr << "sweep: need at least two values\n";
    return 1;
  }
  const auto seeds = resolve_seeds(opts, base_config);
  const CompareResult result = compare(configs, seeds);
  print_summary(result);
  emit_compare_outputs(result, base_config.out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anti-jamming wireless game with value-based RL agents"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  auto* run_cmd = app.add_subcommand("run", "one config, one seed; writes a trace CSV");
  add_common(run_cmd, run_opts);

  CommonOpts compare_opts;
  std::string agents = "ql,dqn,ddqn,pddqn";
  std::string policies = "eps";
  auto* compare_cmd =
      app.add_subcommand("compare", "run several configs over shared seeds");
  add_common(compare_cmd, compare_opts);
  compare_cmd->add_option("--agents", agents, "comma list of agents to compare");
  compare_cmd->add_option("--policies", policies, "comma list of policies");

  CommonOpts sweep_opts;
  std::string param, values;
  auto* sweep_cmd = app.add_subcommand("sweep", "vary one config key over a list");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--param", param, "config key to vary")->required();
  sweep_cmd->add_option("--values", values, "comma list of values")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_opts);
    if (compare_cmd->parsed()) return cmd_compare(compare_opts, agents, policies);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts, param, values);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
