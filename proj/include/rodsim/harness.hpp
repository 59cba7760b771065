#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rodsim/coordination.hpp"
#include "rodsim/scenario.hpp"

namespace rodsim {

/// Workspace for one trial: the scenario's obstacles moved per its zones.
Workspace trial_workspace(const Scenario& scenario, std::uint64_t seed);

/// Randomizes the workspace with `seed` and simulates to a terminal event.
/// Solver failures come back as Outcome::Aborted with a diagnostic.
TrialRecord run_trial(const Scenario& scenario, StrategyKind strategy, std::uint64_t seed);

struct TrialResult {
  StrategyKind strategy = StrategyKind::FullAlgorithm1;
  int trial = 0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::Timeout;
  int steps = 0;
  std::string diagnostic;
};

/// One column of the summary table. Aborted trials count as timed-out
/// failures and are excluded from the step average.
struct StrategySummary {
  StrategyKind strategy = StrategyKind::FullAlgorithm1;
  int trials = 0;
  int successes = 0;
  int collisions = 0;
  int timeouts = 0;
  int aborted = 0;
  /// Mean steps over collision-free, non-aborted trials; empty if none.
  std::optional<double> mean_steps;

  double success_percent() const;
  double collision_percent() const;
  double timeout_percent() const;
};

struct BatchSummary {
  std::vector<StrategySummary> strategies;
};

struct BatchOptions {
  int trials = 100;
  std::vector<StrategyKind> strategies{StrategyKind::NoLearning, StrategyKind::LearningFixedRoles,
                                       StrategyKind::FullAlgorithm1};
  std::uint64_t base_seed = 0;
  int jobs = 1;
};

struct BatchResult {
  /// Ordered by strategy (as requested), then trial index.
  std::vector<TrialResult> trials;
  BatchSummary summary;
};

/// Trial i uses seed base_seed + i under every strategy. Output order does not
/// depend on `jobs`. `progress` is called after each finished trial.
BatchResult run_batch(const Scenario& scenario, const BatchOptions& options,
                      const std::function<void(const TrialResult&)>& progress = {});

BatchSummary summarize(std::span<const TrialResult> trials, std::span<const StrategyKind> strategies);

/// "strategy_1" .. "strategy_3" column labels.
std::string strategy_label(StrategyKind s);

/// Four rows (success %, collision %, timeout %, mean CFT steps) with one
/// column per strategy.
void write_summary_csv(std::ostream& out, const BatchSummary& summary);
void write_results_csv(std::ostream& out, std::span<const TrialResult> trials);
std::vector<TrialResult> read_results_csv(std::istream& in);

/// One JSON object per line; reading it back yields identical records.
void write_trajectory_jsonl(std::ostream& out, std::span<const SubstepRecord> trajectory);
std::vector<SubstepRecord> read_trajectory_jsonl(std::istream& in);

/// Columns: x, y, owner, source, step.
void write_cloud_csv(std::ostream& out, const PointCloud& cloud, AgentId owner);
void write_cloud_csv(std::ostream& out, const TrialRecord& record);

}  // namespace rodsim
