#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rodsim/coordination.hpp"

namespace rodsim {

inline constexpr int kScenarioSchemaVersion = 1;

/// Schema or validation failure. `path` names the offending field, e.g.
/// "workspace.obstacles[1]".
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct Scenario {
  SimulationConfig config;
  Workspace workspace;
  std::vector<RandomizationZone> zones;
  JointState initial = JointState::make(7.5, 0.0, 7.2, 0.0, 0.1, 0.0);
  std::uint64_t seed = 0;

  /// Throws ScenarioError naming the first violated invariant.
  void validate() const;
};

/// Built-in parameters with the bundled obstacle field: a left obstacle that
/// only the initial follower passes close to, a central block, and an
/// upper-right block seen by the initial leader. Obstacle geometry and zones
/// are a hand-tuned reconstruction, not measured data.
Scenario default_scenario();

/// Same parameters with no obstacles and no randomization.
Scenario empty_scenario();

/// Parses a scenario document; missing fields keep default_scenario() values.
/// Unknown fields are rejected.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Serializes every field, so parse_scenario(to_json(s)) reproduces s.
std::string to_json(const Scenario& scenario);

/// Location of the bundled scenario files.
std::filesystem::path bundled_scenario_dir();

}  // namespace rodsim
