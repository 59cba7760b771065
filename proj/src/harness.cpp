#include "rodsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace rodsim {
namespace {

using nlohmann::json;

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

const char* phase_name(SubstepPhase p) {
  switch (p) {
    case SubstepPhase::Initial:
      return "initial";
    case SubstepPhase::AfterDelay:
      return "after_delay";
    case SubstepPhase::PeriodEnd:
      return "period_end";
  }
  return "unknown";
}

SubstepPhase parse_phase(const std::string& s) {
  for (const auto p : {SubstepPhase::Initial, SubstepPhase::AfterDelay, SubstepPhase::PeriodEnd}) {
    if (s == phase_name(p)) return p;
  }
  throw std::invalid_argument("unknown phase '" + s + "'");
}

json wrench_json(const Wrench& w) { return json::array({w.axial, w.perpendicular, w.torque}); }

Wrench wrench_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Workspace trial_workspace(const Scenario& scenario, std::uint64_t seed) {
  if (scenario.zones.empty()) {
    return scenario.workspace;
  }
  return randomize_scenario(scenario.workspace, scenario.zones, seed);
}

TrialRecord run_trial(const Scenario& scenario, StrategyKind strategy, std::uint64_t seed) {
  return simulate(scenario.config, trial_workspace(scenario, seed), scenario.initial, strategy);
}

double StrategySummary::success_percent() const { return trials ? 100.0 * successes / trials : 0.0; }
double StrategySummary::collision_percent() const { return trials ? 100.0 * collisions / trials : 0.0; }
double StrategySummary::timeout_percent() const { return trials ? 100.0 * (timeouts + aborted) / trials : 0.0; }

BatchSummary summarize(std::span<const TrialResult> trials, std::span<const StrategyKind> strategies) {
  BatchSummary out;
  for (const auto strategy : strategies) {
    StrategySummary s;
    s.strategy = strategy;
    long total_steps = 0;
    int counted = 0;
    for (const auto& t : trials) {
      if (t.strategy != strategy) continue;
      ++s.trials;
      switch (t.outcome) {
        case Outcome::Success:
          ++s.successes;
          break;
        case Outcome::Collision:
          ++s.collisions;
          break;
        case Outcome::Timeout:
          ++s.timeouts;
          break;
        case Outcome::Aborted:
          ++s.aborted;
          break;
      }
      if (t.outcome == Outcome::Success || t.outcome == Outcome::Timeout) {
        total_steps += t.steps;
        ++counted;
      }
    }
    if (counted > 0) s.mean_steps = static_cast<double>(total_steps) / counted;
    out.strategies.push_back(s);
  }
  return out;
}

BatchResult run_batch(const Scenario& scenario, const BatchOptions& options,
                      const std::function<void(const TrialResult&)>& progress) {
  if (options.trials < 1) {
    throw std::invalid_argument("batch needs at least one trial");
  }
  if (options.strategies.empty()) {
    throw std::invalid_argument("batch needs at least one strategy");
  }
  BatchResult result;
  for (const auto strategy : options.strategies) {
    for (int i = 0; i < options.trials; ++i) {
      TrialResult t;
      t.strategy = strategy;
      t.trial = i;
      t.seed = options.base_seed + static_cast<std::uint64_t>(i);
      result.trials.push_back(t);
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  const auto worker = [&] {
    for (std::size_t k = next++; k < result.trials.size(); k = next++) {
      TrialResult& t = result.trials[k];
      try {
        const TrialRecord rec = run_trial(scenario, t.strategy, t.seed);
        t.outcome = rec.outcome;
        t.steps = rec.steps;
        t.diagnostic = rec.diagnostic;
      } catch (const std::exception& e) {
        t.outcome = Outcome::Aborted;
        t.steps = 0;
        t.diagnostic = e.what();
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(t);
      }
    }
  };
  const int jobs = std::clamp(options.jobs, 1, static_cast<int>(result.trials.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  result.summary = summarize(result.trials, options.strategies);
  return result;
}

std::string strategy_label(StrategyKind s) {
  switch (s) {
    case StrategyKind::NoLearning:
      return "strategy_1";
    case StrategyKind::LearningFixedRoles:
      return "strategy_2";
    case StrategyKind::FullAlgorithm1:
      return "strategy_3";
  }
  return "unknown";
}

void write_summary_csv(std::ostream& out, const BatchSummary& summary) {
  out << "feature";
  for (const auto& s : summary.strategies) out << ',' << strategy_label(s.strategy);
  out << '\n';
  const auto row = [&](const char* name, auto value) {
    out << name;
    for (const auto& s : summary.strategies) out << ',' << value(s);
    out << '\n';
  };
  row("success_percent", [](const StrategySummary& s) { return fixed(s.success_percent(), 2); });
  row("collision_percent", [](const StrategySummary& s) { return fixed(s.collision_percent(), 2); });
  row("timeout_percent", [](const StrategySummary& s) { return fixed(s.timeout_percent(), 2); });
  row("mean_cft_steps", [](const StrategySummary& s) {
    return s.mean_steps ? fixed(*s.mean_steps, 2) : std::string("NA");
  });
}

void write_results_csv(std::ostream& out, std::span<const TrialResult> trials) {
  out << "strategy,trial,seed,outcome,steps\n";
  for (const auto& t : trials) {
    out << strategy_label(t.strategy) << ',' << t.trial << ',' << t.seed << ',' << to_string(t.outcome) << ','
        << t.steps << '\n';
  }
}

std::vector<TrialResult> read_results_csv(std::istream& in) {
  std::vector<TrialResult> out;
  std::string line;
  if (!std::getline(in, line) || line != "strategy,trial,seed,outcome,steps") {
    throw std::invalid_argument("results CSV: unexpected header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 5 || f[0].rfind("strategy_", 0) != 0) {
      throw std::invalid_argument("results CSV: malformed row '" + line + "'");
    }
    TrialResult t;
    t.strategy = parse_strategy(f[0].substr(9));
    t.trial = std::stoi(f[1]);
    t.seed = std::stoull(f[2]);
    t.outcome = parse_outcome(f[3]);
    t.steps = std::stoi(f[4]);
    out.push_back(t);
  }
  return out;
}

void write_trajectory_jsonl(std::ostream& out, std::span<const SubstepRecord> trajectory) {
  for (const auto& r : trajectory) {
    json state = json::array();
    for (int i = 0; i < 6; ++i) state.push_back(r.state.values[i]);
    json j = {{"step", r.step},
              {"phase", phase_name(r.phase)},
              {"t", r.t},
              {"leader_id", to_string(r.leader)},
              {"state", state},
              {"u", wrench_json(r.u)},
              {"v", wrench_json(r.v)},
              {"switch", r.switched}};
    if (r.inferred_point) {
      j["inferred_point"] = json::array({r.inferred_point->x(), r.inferred_point->y()});
    }
    out << j.dump() << '\n';
  }
}

std::vector<SubstepRecord> read_trajectory_jsonl(std::istream& in) {
  std::vector<SubstepRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    SubstepRecord r;
    r.step = j.at("step").get<int>();
    r.phase = parse_phase(j.at("phase").get<std::string>());
    r.t = j.at("t").get<double>();
    r.leader = j.at("leader_id").get<std::string>() == "B" ? AgentId::B : AgentId::A;
    const json& s = j.at("state");
    for (int i = 0; i < 6; ++i) r.state.values[i] = s.at(i).get<double>();
    r.u = wrench_from(j.at("u"));
    r.v = wrench_from(j.at("v"));
    r.switched = j.at("switch").get<bool>();
    if (j.contains("inferred_point")) {
      const json& p = j.at("inferred_point");
      r.inferred_point = Vec2(p.at(0).get<double>(), p.at(1).get<double>());
    }
    out.push_back(r);
  }
  return out;
}

void write_cloud_csv(std::ostream& out, const PointCloud& cloud, AgentId owner) {
  for (const auto& p : cloud.points()) {
    out << number(p.position.x()) << ',' << number(p.position.y()) << ',' << to_string(owner) << ','
        << to_string(p.source) << ',' << p.step << '\n';
  }
}

void write_cloud_csv(std::ostream& out, const TrialRecord& record) {
  out << "x,y,owner,source,step\n";
  write_cloud_csv(out, record.cloud_a, AgentId::A);
  write_cloud_csv(out, record.cloud_b, AgentId::B);
}

}  // namespace rodsim
