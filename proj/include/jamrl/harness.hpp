#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jamrl/agent.hpp"

namespace jamrl {

/// Everything one experiment needs: the game, the jammers, the learner, the
/// policy initials and the run/metric settings.
struct ExperimentConfig {
  RadioParams radio;
  std::vector<JammerStrategy> jammers{JammerStrategy::uniform_random(),
                                      JammerStrategy::uniform_random()};
  AgentConfig agent;
  PolicyState policy;
  int slots = 400;
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir = "out";
  // Pin the sender to this level of radio.sender_powers (channel still
  // learned); the constant-power baseline of the power-model comparison.
  std::optional<int> constant_power_index;
  int smoothing_window = 20;  // curve smoothing for plots/CSV
  double convergence_fraction = 0.9;
  // Window used by the convergence-slot metric. Much wider than the plot
  // smoothing: the crossing estimator needs jamming noise averaged down to
  // well under the 10% threshold band or late dips dominate the statistic.
  int convergence_window = 200;
  int final_window = 100;  // slots over which "final" SINR is averaged

  /// Throws std::invalid_argument listing every violation at once.
  void validate() const;
};

/// Radio params actually used by a run (after the constant-power rewrite).
RadioParams effective_radio(const ExperimentConfig& config);

struct RunTrace {
  std::vector<SlotRecord> records;
  bool operator==(const RunTrace&) const = default;
};

/// Execute one seeded run; fully deterministic per (config, seed).
RunTrace run(const ExperimentConfig& config, std::uint64_t seed);

std::vector<double> sinr_series(const RunTrace& trace);

/// Trailing mean over min(window, index + 1) entries.
std::vector<double> moving_average(const std::vector<double>& series, int window);

/// First slot where the window-smoothed series reaches `fraction` of the
/// final-window mean and never drops below again; nullopt if it never does.
std::optional<long> convergence_slot(const std::vector<double>& series,
                                     double fraction, int window);

/// Mean transmit power over the trace, in watts.
double average_power(const RunTrace& trace, const RadioParams& params);

void write_trace_csv(const RunTrace& trace, std::ostream& out);
RunTrace read_trace_csv(std::istream& in);

struct NamedConfig {
  std::string name;
  ExperimentConfig config;
};

struct ConfigSummary {
  std::string name;
  double final_mean = 0.0;  // across seeds: mean of per-seed final-window SINR
  double final_std = 0.0;
  double median_convergence = 0.0;  // never-converged seeds count as `slots`
  double mean_avg_power = 0.0;
  std::vector<double> per_seed_final_mean;
  std::vector<double> per_seed_convergence;
  std::vector<double> per_seed_avg_power;
  std::vector<double> mean_curve;  // seed-averaged smoothed SINR
};

struct CompareResult {
  int slots = 0;
  std::vector<ConfigSummary> configs;
};

/// Run every (config, seed) pair and aggregate. All configs must share the
/// same slot count.
CompareResult compare(std::span<const NamedConfig> configs,
                      std::span<const std::uint64_t> seeds);

void write_curves_csv(const CompareResult& result, std::ostream& out);
void write_summary_csv(const CompareResult& result, std::ostream& out);
/// Static line chart of the mean curves.
void write_curves_svg(const CompareResult& result, std::ostream& out);

double mean(std::span<const double> values);
double sample_std(std::span<const double> values);
double median(std::span<const double> values);
double pooled_std(std::span<const double> a, std::span<const double> b);

/// One-sided sign test for H1 "a > b" over paired values; ties dropped.
/// Returns the exact binomial tail probability under H0.
double sign_test_p(std::span<const double> a, std::span<const double> b);

}  // namespace jamrl
