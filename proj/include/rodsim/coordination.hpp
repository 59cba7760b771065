#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rodsim/environment.hpp"
#include "rodsim/follower_policy.hpp"
#include "rodsim/leader_mpc.hpp"
#include "rodsim/obstacle_inference.hpp"

namespace rodsim {

/// Agent A is the initial leader; the canonical joint state is always
/// referenced at agent A's end of the rod.
enum class AgentId { A, B };

inline AgentId other(AgentId id) { return id == AgentId::A ? AgentId::B : AgentId::A; }
const char* to_string(AgentId id);

enum class StrategyKind { NoLearning, LearningFixedRoles, FullAlgorithm1 };

const char* to_string(StrategyKind s);
/// Accepts "1"/"2"/"3" or "no-learning"/"fixed-roles"/"full".
StrategyKind parse_strategy(std::string_view text);
bool learning_enabled(StrategyKind s);
bool switching_enabled(StrategyKind s);

/// Control timeline: the leader acts at period boundaries, the follower
/// switches input `delay` into the period.
struct Schedule {
  double period = 0.03;
  double delay = 0.02;
  double duration = 2.7;

  int periods() const;
  void validate() const;
};

struct RoleState {
  AgentId leader = AgentId::A;
  int switch_count = 0;
  bool pending_switch = false;
};

class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulationConfig {
  RodParams rod;
  Schedule schedule;
  FollowerConfig follower;
  MpcConfig mpc;
  SensorConfig sensor;
  double switch_distance = 0.8;
  double success_radius = 0.5;
  double cloud_resolution = 0.01;
  double reaction_tolerance = kReactionTolerance;

  /// Also checks that the MPC shares the schedule period, input bounds and
  /// assist gain with the rest of the configuration.
  void validate() const;
};

struct AgentState {
  PointCloud cloud;
  /// Last applied wrench, expressed in agent A's rod frame.
  Wrench last_input;
  std::optional<std::vector<Wrench>> warm_start;
};

struct World {
  Workspace workspace;
  JointState state;
  RoleState roles;
  std::array<AgentState, 2> agents;
  int step = 0;

  AgentState& agent(AgentId id) { return agents[static_cast<int>(id)]; }
  const AgentState& agent(AgentId id) const { return agents[static_cast<int>(id)]; }
};

World make_world(const SimulationConfig& cfg, Workspace workspace, const JointState& initial);

/// Position of each agent's robot in the world.
Vec2 agent_position(const RodParams& rod, const JointState& canonical, AgentId id);

/// Canonical state viewed from the given leader's end, and back.
JointState to_leader_frame(const RodParams& rod, const JointState& canonical, AgentId leader);
JointState from_leader_frame(const RodParams& rod, const JointState& leader_state, AgentId leader);
RodParams leader_params(const RodParams& rod, AgentId leader);

enum class SubstepPhase { Initial, AfterDelay, PeriodEnd };

/// One trajectory sample. `u` and `v` are the leader's and follower's wrenches
/// applied over the sub-step ending at `t`, in the current leader's rod frame.
struct SubstepRecord {
  int step = 0;
  SubstepPhase phase = SubstepPhase::Initial;
  double t = 0.0;
  AgentId leader = AgentId::A;
  JointState state;
  Wrench u;
  Wrench v;
  std::optional<Vec2> inferred_point;
  bool switched = false;

  bool operator==(const SubstepRecord&) const = default;
};

struct PeriodEvents {
  std::vector<SubstepRecord> substeps;
  bool collision = false;
  bool switched = false;
  std::optional<CriticalObstacle> follower_critical;
  std::optional<Vec2> inferred;
  int follower_vote = 0;
  int leader_vote = 0;
  MpcSolution mpc;
  std::size_t leader_cloud_size = 0;
};

/// Role switching rule: 1 iff an obstacle estimate exists
/// within `threshold` of the follower position estimate.
int evaluate_switch(const Vec2& follower_pos, const std::optional<Vec2>& obstacle, double threshold);

/// Applies a latched switch: flips the leader and clears the latch.
RoleState apply_switch(const RoleState& role);

/// Advances the world by one control period. Throws SolverError if the MPC
/// fails and ConsistencyError if the agents disagree on a role switch.
PeriodEvents step_period(World& world, const SimulationConfig& cfg, StrategyKind strategy);

enum class Outcome { Success, Collision, Timeout, Aborted };
const char* to_string(Outcome o);
Outcome parse_outcome(std::string_view text);

struct TrialRecord {
  Outcome outcome = Outcome::Timeout;
  int steps = 0;
  std::vector<SubstepRecord> trajectory;
  PointCloud cloud_a;
  PointCloud cloud_b;
  int switch_count = 0;
  std::string diagnostic;
};

struct Classification {
  Outcome outcome = Outcome::Timeout;
  int steps = 0;
};

/// Collision if any sample collides; otherwise success at the first sample
/// where agent A is within `radius` of the target; otherwise timeout.
Classification classify(std::span<const SubstepRecord> trajectory, const Workspace& workspace,
                        const RodParams& rod, const Vec2& target, double radius, int periods);

/// Runs one closed-loop trial to a terminal event.
TrialRecord simulate(const SimulationConfig& cfg, const Workspace& workspace, const JointState& initial,
                     StrategyKind strategy);

}  // namespace rodsim
