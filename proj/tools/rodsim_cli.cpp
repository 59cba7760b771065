// Command line front-end: single trials, Monte-Carlo batches and scenario lint.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rodsim/harness.hpp"

namespace fs = std::filesystem;
using namespace rodsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitAborted = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("rodsim");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("RODSIM_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

Scenario scenario_from(const std::string& path) {
  if (path.empty()) {
    return default_scenario();
  }
  return load_scenario(path);
}

std::ofstream open_output(const fs::path& dir, const char* name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + (dir / name).string());
  }
  return out;
}

std::vector<StrategyKind> parse_strategies(const std::string& list) {
  std::vector<StrategyKind> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_strategy(item));
  }
  if (out.empty()) {
    throw std::invalid_argument("no strategies given");
  }
  return out;
}

int cmd_run(const std::string& scenario_path, const std::string& strategy_name, std::optional<std::uint64_t> seed,
            const std::string& out_dir) {
  const Scenario scenario = scenario_from(scenario_path);
  const StrategyKind strategy = parse_strategy(strategy_name);
  const std::uint64_t s = seed.value_or(scenario.seed);
  spdlog::info("running strategy {} with seed {}", to_string(strategy), s);
  const TrialRecord rec = run_trial(scenario, strategy, s);

  std::cout << "outcome=" << to_string(rec.outcome) << " steps=" << rec.steps << " switches=" << rec.switch_count
            << " leader_cloud=" << rec.cloud_a.size() << " follower_cloud=" << rec.cloud_b.size() << '\n';
  if (!out_dir.empty()) {
    auto traj = open_output(out_dir, "trajectory.jsonl");
    write_trajectory_jsonl(traj, rec.trajectory);
    auto cloud = open_output(out_dir, "clouds.csv");
    write_cloud_csv(cloud, rec);
    auto result = open_output(out_dir, "result.csv");
    const TrialResult row{strategy, 0, s, rec.outcome, rec.steps, rec.diagnostic};
    write_results_csv(result, std::span(&row, 1));
  }
  if (rec.outcome == Outcome::Aborted) {
    spdlog::error("trial aborted: {}", rec.diagnostic);
    return kExitAborted;
  }
  return kExitOk;
}

int cmd_batch(const std::string& scenario_path, int trials, const std::string& strategies, std::uint64_t seed,
              int jobs, const std::string& out_dir) {
  const Scenario scenario = scenario_from(scenario_path);
  BatchOptions options;
  options.trials = trials;
  options.strategies = parse_strategies(strategies);
  options.base_seed = seed;
  options.jobs = jobs;
  const BatchResult result = run_batch(scenario, options, [](const TrialResult& t) {
    spdlog::info("{} trial {} seed {}: {} after {} steps", strategy_label(t.strategy), t.trial, t.seed,
                 to_string(t.outcome), t.steps);
    if (t.outcome == Outcome::Aborted) {
      spdlog::warn("{} trial {} aborted: {}", strategy_label(t.strategy), t.trial, t.diagnostic);
    }
  });

  write_summary_csv(std::cout, result.summary);
  if (!out_dir.empty()) {
    auto results = open_output(out_dir, "results.csv");
    write_results_csv(results, result.trials);
    auto summary = open_output(out_dir, "summary.csv");
    write_summary_csv(summary, result.summary);
  }
  return kExitOk;
}

int cmd_validate(const std::vector<std::string>& paths, bool dump) {
  int status = kExitOk;
  for (const auto& path : paths) {
    try {
      const Scenario s = load_scenario(path);
      std::cout << path << ": ok\n";
      if (dump) std::cout << to_json(s);
    } catch (const ScenarioError& e) {
      std::cout << path << ": " << e.what() << '\n';
      status = kExitInvalid;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Two-robot rod transport simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Simulate a single trial");
  std::string strategy = "3";
  std::optional<std::uint64_t> run_seed;
  run->add_option("--scenario", scenario_path, "Scenario JSON (default: built-in)");
  run->add_option("--strategy", strategy, "1|2|3 or no-learning|fixed-roles|full")->capture_default_str();
  run->add_option("--seed", run_seed, "Randomization seed (default: scenario seed)");
  run->add_option("--out", out_dir, "Directory for trajectory.jsonl, clouds.csv and result.csv");

  auto* batch = app.add_subcommand("batch", "Run paired-seed Monte-Carlo trials");
  int trials = 100;
  std::string strategies = "1,2,3";
  std::uint64_t batch_seed = 0;
  int jobs = 1;
  batch->add_option("--scenario", scenario_path, "Scenario JSON (default: built-in)");
  batch->add_option("--trials", trials, "Trials per strategy")->check(CLI::PositiveNumber)->capture_default_str();
  batch->add_option("--strategies", strategies, "Comma-separated strategies")->capture_default_str();
  batch->add_option("--seed", batch_seed, "Seed of trial 0")->capture_default_str();
  batch->add_option("--jobs", jobs, "Concurrent trials")->check(CLI::PositiveNumber)->capture_default_str();
  batch->add_option("--out", out_dir, "Directory for results.csv and summary.csv");

  auto* validate = app.add_subcommand("validate", "Check scenario files");
  std::vector<std::string> paths;
  bool dump = false;
  validate->add_option("scenarios", paths, "Scenario JSON files")->required();
  validate->add_flag("--dump", dump, "Print the scenario with defaults filled in");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario_path, strategy, run_seed, out_dir);
    if (*batch) return cmd_batch(scenario_path, trials, strategies, batch_seed, jobs, out_dir);
    return cmd_validate(paths, dump);
  } catch (const ScenarioError& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAborted;
  }
}
