#include "jamrl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace jamrl {

void ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  const auto collect = [&](const auto& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errors.emplace_back(e.what());
    }
  };
  collect([&] { radio.validate(); });
  collect([&] { agent.validate(); });
  collect([&] { policy.validate(); });
  if (static_cast<int>(jammers.size()) != radio.num_jammers()) {
    errors.push_back("config: jammer strategy count must match h_j length");
  }
  collect([&] { validate_strategies(jammers, radio); });
  if (slots < agent.history_window + 1) {
    errors.push_back("config: slots must be >= W + 1");
  }
  if (seeds.empty()) errors.push_back("config: at least one seed required");
  if (constant_power_index &&
      (*constant_power_index < 0 ||
       *constant_power_index >= radio.num_power_levels())) {
    errors.push_back("config: constant_power_index out of range");
  }
  if (smoothing_window < 1) errors.push_back("config: smoothing_window must be >= 1");
  if (convergence_window < 1) errors.push_back("config: convergence_window must be >= 1");
  if (final_window < 1) errors.push_back("config: final_window must be >= 1");
  if (!(convergence_fraction > 0.0) || convergence_fraction > 1.0) {
    errors.push_back("config: convergence_fraction must be in (0, 1]");
  }
  if (!errors.empty()) {
    std::string all;
    for (const auto& e : errors) {
      if (!all.empty()) all += "\n";
      all += e;
    }
    throw std::invalid_argument(all);
  }
}

RadioParams effective_radio(const ExperimentConfig& config) {
  RadioParams radio = config.radio;
  if (config.constant_power_index) {
    radio.sender_powers = {
        config.radio.sender_powers.at(*config.constant_power_index)};
  }
  return radio;
}

RunTrace run(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const RadioParams radio = effective_radio(config);
  std::uint64_t state = seed;
  const std::uint64_t env_seed = splitmix64(state);
  const std::uint64_t agent_seed = splitmix64(state);
  Environment env(radio, config.jammers, env_seed);
  Agent agent(config.agent, config.policy, radio, agent_seed);
  RunTrace trace;
  trace.records.reserve(config.slots);
  for (int k = 0; k < config.slots; ++k) {
    trace.records.push_back(agent.step(env));
  }
  return trace;
}

std::vector<double> sinr_series(const RunTrace& trace) {
  std::vector<double> series;
  series.reserve(trace.records.size());
  for (const auto& r : trace.records) series.push_back(r.sinr);
  return series;
}

std::vector<double> moving_average(const std::vector<double>& series, int window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    if (i >= static_cast<std::size_t>(window)) sum -= series[i - window];
    const auto n = std::min<std::size_t>(window, i + 1);
    out[i] = sum / static_cast<double>(n);
  }
  return out;
}

std::optional<long> convergence_slot(const std::vector<double>& series,
                                     double fraction, int window) {
  if (series.empty()) return std::nullopt;
  const long n = static_cast<long>(series.size());
  const std::vector<double> smoothed = moving_average(series, window);
  const long tail = std::min<long>(window, n);
  const double tail_mean =
      std::accumulate(series.end() - tail, series.end(), 0.0) /
      static_cast<double>(tail);
  const double threshold = fraction * tail_mean;
  long first = n;
  for (long i = n - 1; i >= 0; --i) {
    if (smoothed[i] >= threshold) {
      first = i;
    } else {
      break;
    }
  }
  if (first == n) return std::nullopt;
  return first;
}

double average_power(const RunTrace& trace, const RadioParams& params) {
  if (trace.records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : trace.records) sum += params.sender_powers.at(r.power_index);
  return sum / static_cast<double>(trace.records.size());
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : line) {
    if (c == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(current);
  return parts;
}

double parse_double_token(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str()) {
    throw std::runtime_error("trace csv: bad number '" + token + "'");
  }
  return v;
}

ActionSource parse_source(const std::string& s) {
  if (s == "warmup") return ActionSource::warmup;
  if (s == "repeat") return ActionSource::repeat;
  if (s == "explore") return ActionSource::explore;
  if (s == "greedy") return ActionSource::greedy;
  throw std::runtime_error("trace csv: unknown branch '" + s + "'");
}

constexpr const char* kTraceHeader =
    "slot,sinr,utility,tau,epsilon,channel,power_index,blocked,branch,"
    "jam_channels,jam_powers";

}  // namespace

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.slot << ',' << fmt_double(r.sinr) << ',' << fmt_double(r.utility)
        << ',' << fmt_double(r.tau) << ',' << fmt_double(r.epsilon) << ','
        << r.channel << ',' << r.power_index << ',' << (r.blocked ? 1 : 0)
        << ',' << to_string(r.source) << ',';
    for (std::size_t j = 0; j < r.jam.size(); ++j) {
      if (j) out << ';';
      out << r.jam[j].channel;
    }
    out << ',';
    for (std::size_t j = 0; j < r.jam.size(); ++j) {
      if (j) out << ';';
      out << r.jam[j].power_index;
    }
    out << '\n';
  }
}

RunTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw std::runtime_error("trace csv: bad header");
  }
  RunTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto parts = split(line, ',');
    if (parts.size() != 11) throw std::runtime_error("trace csv: bad row");
    SlotRecord r;
    r.slot = std::strtol(parts[0].c_str(), nullptr, 10);
    r.sinr = parse_double_token(parts[1]);
    r.utility = parse_double_token(parts[2]);
    r.tau = parse_double_token(parts[3]);
    r.epsilon = parse_double_token(parts[4]);
    r.channel = static_cast<int>(std::strtol(parts[5].c_str(), nullptr, 10));
    r.power_index = static_cast<int>(std::strtol(parts[6].c_str(), nullptr, 10));
    r.blocked = parts[7] == "1";
    r.source = parse_source(parts[8]);
    if (!parts[9].empty()) {
      const auto channels = split(parts[9], ';');
      const auto powers = split(parts[10], ';');
      if (channels.size() != powers.size()) {
        throw std::runtime_error("trace csv: jammer list length mismatch");
      }
      for (std::size_t j = 0; j < channels.size(); ++j) {
        r.jam.push_back(
            {static_cast<int>(std::strtol(channels[j].c_str(), nullptr, 10)),
             static_cast<int>(std::strtol(powers[j].c_str(), nullptr, 10))});
      }
    }
    trace.records.push_back(std::move(r));
  }
  return trace;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double median(std::span<const double> values) {
  if (values.empty()) return 0.0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2]
                    : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double pooled_std(std::span<const double> a, std::span<const double> b) {
  const double sa = sample_std(a), sb = sample_std(b);
  return std::sqrt(0.5 * (sa * sa + sb * sb));
}

double sign_test_p(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("sign_test_p: paired samples required");
  }
  int wins = 0, n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    ++n;
    if (a[i] > b[i]) ++wins;
  }
  if (n == 0) return 1.0;
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                            std::lgamma(n - k + 1.0) -
                            n * std::log(2.0);
    p += std::exp(log_term);
  }
  return std::min(p, 1.0);
}

CompareResult compare(std::span<const NamedConfig> configs,
                      std::span<const std::uint64_t> seeds) {
  if (configs.size() < 2) {
    throw std::invalid_argument("compare: at least two configs required");
  }
  if (seeds.empty()) throw std::invalid_argument("compare: at least one seed required");
  CompareResult result;
  result.slots = configs.front().config.slots;
  for (const auto& named : configs) {
    if (named.config.slots != result.slots) {
      throw std::invalid_argument("compare: all configs must share the slot count");
    }
  }
  for (const auto& named : configs) {
    const ExperimentConfig& cfg = named.config;
    const RadioParams radio = effective_radio(cfg);
    ConfigSummary summary;
    summary.name = named.name;
    summary.mean_curve.assign(cfg.slots, 0.0);
    for (const std::uint64_t seed : seeds) {
      const RunTrace trace = run(cfg, seed);
      const std::vector<double> series = sinr_series(trace);
      const std::vector<double> smoothed =
          moving_average(series, cfg.smoothing_window);
      for (int i = 0; i < cfg.slots; ++i) summary.mean_curve[i] += smoothed[i];
      const int fw = std::min<int>(cfg.final_window, cfg.slots);
      summary.per_seed_final_mean.push_back(
          mean(std::span<const double>(series).last(fw)));
      const auto conv =
          convergence_slot(series, cfg.convergence_fraction, cfg.convergence_window);
      summary.per_seed_convergence.push_back(
          conv ? static_cast<double>(*conv) : static_cast<double>(cfg.slots));
      summary.per_seed_avg_power.push_back(average_power(trace, radio));
    }
    const double n = static_cast<double>(seeds.size());
    for (auto& v : summary.mean_curve) v /= n;
    summary.final_mean = mean(summary.per_seed_final_mean);
    summary.final_std = sample_std(summary.per_seed_final_mean);
    summary.median_convergence = median(summary.per_seed_convergence);
    summary.mean_avg_power = mean(summary.per_seed_avg_power);
    result.configs.push_back(std::move(summary));
  }
  return result;
}

void write_curves_csv(const CompareResult& result, std::ostream& out) {
  out << "slot";
  for (const auto& c : result.configs) out << ',' << c.name;
  out << '\n';
  for (int i = 0; i < result.slots; ++i) {
    out << i;
    for (const auto& c : result.configs) out << ',' << fmt_double(c.mean_curve[i]);
    out << '\n';
  }
}

void write_summary_csv(const CompareResult& result, std::ostream& out) {
  out << "config,final_mean_sinr,final_std_sinr,median_convergence_slot,"
         "mean_avg_power\n";
  for (const auto& c : result.configs) {
    out << c.name << ',' << fmt_double(c.final_mean) << ','
        << fmt_double(c.final_std) << ',' << fmt_double(c.median_convergence)
        << ',' << fmt_double(c.mean_avg_power) << '\n';
  }
}

void write_curves_svg(const CompareResult& result, std::ostream& out) {
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  const int width = 760, height = 420;
  const int left = 60, right = 150, top = 20, bottom = 40;
  const int plot_w = width - left - right, plot_h = height - top - bottom;
  double ymax = 1e-9;
  for (const auto& c : result.configs) {
    for (double v : c.mean_curve) ymax = std::max(ymax, v);
  }
  const auto x_of = [&](int i) {
    return left + plot_w * static_cast<double>(i) /
                      std::max(1, result.slots - 1);
  };
  const auto y_of = [&](double v) { return top + plot_h * (1.0 - v / ymax); };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\""
      << left + plot_w << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 8
      << "\" font-size=\"12\" text-anchor=\"middle\">slot</text>\n";
  out << "<text x=\"14\" y=\"" << top + plot_h / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << top + plot_h / 2 << ")\">smoothed SINR</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = ymax * tick / 4.0;
    out << "<text x=\"" << left - 6 << "\" y=\"" << y_of(v) + 4
        << "\" font-size=\"10\" text-anchor=\"end\">" << fmt_double(v).substr(0, 6)
        << "</text>\n";
  }
  for (std::size_t c = 0; c < result.configs.size(); ++c) {
    const auto& curve = result.configs[c].mean_curve;
    out << "<polyline fill=\"none\" stroke=\"" << kColors[c % 8]
        << "\" stroke-width=\"1.5\" points=\"";
    for (int i = 0; i < result.slots; ++i) {
      out << x_of(i) << ',' << y_of(curve[i]) << ' ';
    }
    out << "\"/>\n";
    const int ly = top + 16 + static_cast<int>(c) * 16;
    out << "<line x1=\"" << left + plot_w + 10 << "\" y1=\"" << ly << "\" x2=\""
        << left + plot_w + 30 << "\" y2=\"" << ly << "\" stroke=\""
        << kColors[c % 8] << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + plot_w + 34 << "\" y=\"" << ly + 4
        << "\" font-size=\"11\">" << result.configs[c].name << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace jamrl
