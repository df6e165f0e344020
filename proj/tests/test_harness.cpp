#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "jamrl/config.hpp"
#include "jamrl/harness.hpp"

using namespace jamrl;

namespace {

ExperimentConfig quick_config(AgentKind kind = AgentKind::pddqn) {
  ExperimentConfig cfg;
  cfg.radio.num_channels = 8;
  cfg.agent.kind = kind;
  cfg.agent.history_window = 4;
  cfg.agent.replay.capacity = 128;
  cfg.agent.replay.batch_size = 4;
  if (kind != AgentKind::pddqn) {
    cfg.agent.replay.selection = ReplayConfig::Selection::uniform;
  }
  cfg.slots = 80;
  return cfg;
}

// Reference scan for the convergence metric: O(n^2), no early exits.
std::optional<long> convergence_oracle(const std::vector<double>& series,
                                       double fraction, int window) {
  const long n = static_cast<long>(series.size());
  if (n == 0) return std::nullopt;
  const std::vector<double> sm = moving_average(series, window);
  const long tail = std::min<long>(window, n);
  double tail_mean = 0.0;
  for (long i = n - tail; i < n; ++i) tail_mean += series[i];
  tail_mean /= static_cast<double>(tail);
  const double threshold = fraction * tail_mean;
  for (long t = 0; t < n; ++t) {
    bool holds = true;
    for (long u = t; u < n; ++u) {
      if (sm[u] < threshold) {
        holds = false;
        break;
      }
    }
    if (holds) return t;
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("moving_average: constant, identity and two-point cases") {
  const std::vector<double> constant{2.0, 2.0, 2.0};
  CHECK(moving_average(constant, 5) == constant);

  const std::vector<double> any{3.0, 1.0, 4.0};
  CHECK(moving_average(any, 1) == any);

  const std::vector<double> two{0.0, 10.0};
  const auto out = moving_average(two, 2);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 5.0);
}

TEST_CASE("convergence_slot: constant series converges at slot 0") {
  const std::vector<double> series(50, 3.0);
  const auto slot = convergence_slot(series, 0.9, 10);
  REQUIRE(slot.has_value());
  CHECK(*slot == 0);
}

TEST_CASE("convergence_slot: a step lands exactly on the step slot") {
  std::vector<double> series(200, 0.0);
  for (int i = 100; i < 200; ++i) series[i] = 1.0;
  const auto slot = convergence_slot(series, 0.9, 1);
  REQUIRE(slot.has_value());
  CHECK(*slot == 100);
}

TEST_CASE("convergence_slot: agrees with the brute-force oracle") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 10 + rng.uniform_int(120);
    std::vector<double> series(n);
    const int mode = rng.uniform_int(3);
    for (int i = 0; i < n; ++i) {
      if (mode == 0) {
        series[i] = rng.uniform() * 5.0;  // noise
      } else if (mode == 1) {
        series[i] = 5.0 - 4.0 * i / n + rng.uniform();  // decreasing trend
      } else {
        series[i] = (i > n / 3 ? 4.0 : 0.5) + rng.uniform();  // step up
      }
    }
    const int window = 1 + rng.uniform_int(12);
    const auto fast = convergence_slot(series, 0.9, window);
    const auto slow = convergence_oracle(series, 0.9, window);
    CHECK(fast == slow);
  }
}

TEST_CASE("average_power: constant and mixed selections") {
  const RadioParams radio;
  RunTrace trace;
  for (int i = 0; i < 10; ++i) {
    SlotRecord r;
    r.power_index = 1;  // 5 W
    trace.records.push_back(r);
  }
  CHECK(average_power(trace, radio) == doctest::Approx(5.0));
  for (int i = 0; i < 5; ++i) trace.records[i].power_index = 0;   // 1 W
  for (int i = 5; i < 10; ++i) trace.records[i].power_index = 2;  // 10 W
  CHECK(average_power(trace, radio) == doctest::Approx(5.5));
}

TEST_CASE("run: identical config and seed give bitwise-identical traces") {
  const ExperimentConfig cfg = quick_config();
  const RunTrace a = run(cfg, 17);
  const RunTrace b = run(cfg, 17);
  CHECK(a == b);
  std::ostringstream csv_a, csv_b;
  write_trace_csv(a, csv_a);
  write_trace_csv(b, csv_b);
  CHECK(csv_a.str() == csv_b.str());
}

TEST_CASE("run: slots equal to W is pure warm-up") {
  ExperimentConfig cfg = quick_config();
  cfg.slots = cfg.agent.history_window + 1;
  const RunTrace trace = run(cfg, 3);
  for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
    CHECK(trace.records[i].source == ActionSource::warmup);
  }
  CHECK(trace.records.back().source != ActionSource::warmup);
}

TEST_CASE("run: every utility is recomputable from the logged jammer actions") {
  const ExperimentConfig cfg = quick_config();
  const RadioParams radio = effective_radio(cfg);
  const RunTrace trace = run(cfg, 23);
  for (const auto& r : trace.records) {
    const SenderAction action{r.channel, r.power_index};
    const double sinr = compute_sinr(action, r.jam, radio);
    CHECK(sinr == r.sinr);
    CHECK(compute_utility(sinr, action, r.jam, radio) == r.utility);
    const SlotOutcome outcome = make_outcome(action, r.jam, radio);
    CHECK(outcome.blocked == r.blocked);
  }
}

TEST_CASE("trace csv: parse of an emitted file reproduces the trace exactly") {
  const RunTrace trace = run(quick_config(), 31);
  std::stringstream stream;
  write_trace_csv(trace, stream);
  const RunTrace parsed = read_trace_csv(stream);
  CHECK(parsed == trace);
}

TEST_CASE("constant power pin: single-level game, channel still free") {
  ExperimentConfig cfg = quick_config();
  cfg.constant_power_index = 1;
  const RadioParams radio = effective_radio(cfg);
  REQUIRE(radio.num_power_levels() == 1);
  CHECK(radio.sender_powers[0] == 5.0);
  const RunTrace trace = run(cfg, 7);
  for (const auto& r : trace.records) CHECK(r.power_index == 0);
  CHECK(average_power(trace, radio) == doctest::Approx(5.0));
}

TEST_CASE("compare: a config against itself yields identical rows") {
  const ExperimentConfig cfg = quick_config(AgentKind::ddqn);
  const std::vector<NamedConfig> configs{{"left", cfg}, {"right", cfg}};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const CompareResult result = compare(configs, seeds);
  REQUIRE(result.configs.size() == 2);
  CHECK(result.configs[0].final_mean == result.configs[1].final_mean);
  CHECK(result.configs[0].final_std == result.configs[1].final_std);
  CHECK(result.configs[0].median_convergence == result.configs[1].median_convergence);
  CHECK(result.configs[0].mean_curve == result.configs[1].mean_curve);
}

TEST_CASE("compare: summaries are invariant under seed permutation") {
  const ExperimentConfig cfg = quick_config(AgentKind::ql);
  const std::vector<NamedConfig> configs{{"a", cfg}, {"b", quick_config(AgentKind::dqn)}};
  const std::vector<std::uint64_t> forward{1, 2, 3, 4};
  const std::vector<std::uint64_t> shuffled{3, 1, 4, 2};
  const CompareResult p = compare(configs, forward);
  const CompareResult q = compare(configs, shuffled);
  for (std::size_t i = 0; i < p.configs.size(); ++i) {
    CHECK(p.configs[i].final_mean == doctest::Approx(q.configs[i].final_mean).epsilon(1e-12));
    CHECK(p.configs[i].final_std == doctest::Approx(q.configs[i].final_std).epsilon(1e-12));
    CHECK(p.configs[i].median_convergence == q.configs[i].median_convergence);
  }
}

TEST_CASE("compare: mismatched slot counts are rejected") {
  ExperimentConfig a = quick_config();
  ExperimentConfig b = quick_config();
  b.slots = a.slots + 1;
  const std::vector<NamedConfig> configs{{"a", a}, {"b", b}};
  const std::vector<std::uint64_t> seeds{1};
  CHECK_THROWS_AS(compare(configs, seeds), std::invalid_argument);
}

TEST_CASE("compare csv emission has one column per config") {
  const std::vector<NamedConfig> configs{{"one", quick_config(AgentKind::ql)},
                                         {"two", quick_config(AgentKind::ql)}};
  const std::vector<std::uint64_t> seeds{1, 2};
  const CompareResult result = compare(configs, seeds);
  std::ostringstream curves, summary, svg;
  write_curves_csv(result, curves);
  write_summary_csv(result, summary);
  write_curves_svg(result, svg);
  CHECK(curves.str().substr(0, 13) == "slot,one,two\n");
  CHECK(summary.str().find("one,") != std::string::npos);
  CHECK(svg.str().find("<svg") != std::string::npos);
}

TEST_CASE("sign test: exact binomial tails") {
  const std::vector<double> a{1, 1, 1, 1, 1};
  const std::vector<double> b{0, 0, 0, 0, 0};
  CHECK(sign_test_p(a, b) == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
  const std::vector<double> c{1, 1, 1, 1, 0};
  const std::vector<double> d{0, 0, 0, 0, 1};
  CHECK(sign_test_p(c, d) == doctest::Approx(6.0 / 32.0).epsilon(1e-12));
  CHECK(sign_test_p(b, a) == doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<double> ties{2, 2};
  CHECK(sign_test_p(ties, ties) == 1.0);
}

TEST_CASE("stats helpers: mean, std, median, pooled std") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(mean(v) == doctest::Approx(2.5));
  CHECK(sample_std(v) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
  CHECK(median(v) == doctest::Approx(2.5));
  const std::vector<double> w{1.0, 3.0, 5.0};
  CHECK(median(w) == 3.0);
  CHECK(pooled_std(v, v) == doctest::Approx(sample_std(v)).epsilon(1e-12));
}

TEST_CASE("config file: keys parse, apply and override defaults") {
  std::istringstream file(
      "# demo config\n"
      "num_channels = 8\n"
      "sender_powers = 1, 5, 10\n"
      "agent = ddqn\n"
      "policy = tau-eps\n"
      "sigma2 = 50\n"
      "jammers = sweep:2:1, reactive:0.75\n"
      "slots = 120\n"
      "seeds = 4, 5\n");
  ConfigLoader loader;
  loader.apply_file(file);
  const ExperimentConfig cfg = loader.finish();
  CHECK(cfg.radio.num_channels == 8);
  CHECK(cfg.agent.kind == AgentKind::ddqn);
  CHECK(cfg.agent.policy_kind == PolicyKind::tau_epsilon_greedy);
  CHECK(cfg.policy.sigma2 == 50.0);
  CHECK(cfg.slots == 120);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 5});
  REQUIRE(cfg.jammers.size() == 2);
  CHECK(cfg.jammers[0].kind == JammerStrategy::Kind::sweep);
  CHECK(cfg.jammers[0].stride == 2);
  CHECK(cfg.jammers[1].kind == JammerStrategy::Kind::reactive);
  CHECK(cfg.jammers[1].follow_probability == 0.75);
  // Non-PDDQN agents fall back to the uniform buffer.
  CHECK(cfg.agent.replay.selection == ReplayConfig::Selection::uniform);
}

TEST_CASE("config file: explicit selection wins over the agent default") {
  ConfigLoader loader;
  loader.apply("agent", "ddqn");
  loader.apply("selection", "proportional");
  CHECK(loader.finish().agent.replay.selection ==
        ReplayConfig::Selection::proportional_stratified);
}

TEST_CASE("config file: unknown keys and malformed lines are rejected") {
  ConfigLoader loader;
  CHECK_THROWS_AS(loader.apply("no_such_key", "1"), std::invalid_argument);
  CHECK_THROWS_AS(loader.apply("gamma", "zero point five"), std::invalid_argument);
  std::istringstream bad("gamma 0.5\n");
  CHECK_THROWS_AS(parse_key_values(bad), std::invalid_argument);
}

TEST_CASE("config validation: every failure is listed before any work") {
  ExperimentConfig cfg = quick_config();
  cfg.radio.beta = 0.0;
  cfg.slots = 1;
  cfg.seeds.clear();
  try {
    run(cfg, 1);
    FAIL("expected validation to throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("beta") != std::string::npos);
    CHECK(msg.find("slots") != std::string::npos);
    CHECK(msg.find("seed") != std::string::npos);
  }
}
