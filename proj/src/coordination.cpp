#include "rodsim/coordination.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rodsim {
namespace {

Wrench to_frame(const Wrench& canonical, AgentId leader) {
  return leader == AgentId::A ? canonical : swap_wrench(canonical);
}

Wrench from_frame(const Wrench& w, AgentId leader) { return to_frame(w, leader); }

PointSource sensed_source(AgentId agent, AgentId leader) {
  return agent == leader ? PointSource::LeaderSensed : PointSource::FollowerSensed;
}

bool collides(const World& world, const RodParams& rod) {
  return rod_collides(world.workspace, agent_position(rod, world.state, AgentId::A),
                      agent_position(rod, world.state, AgentId::B));
}

}  // namespace

const char* to_string(AgentId id) { return id == AgentId::A ? "A" : "B"; }

const char* to_string(StrategyKind s) {
  switch (s) {
    case StrategyKind::NoLearning:
      return "no-learning";
    case StrategyKind::LearningFixedRoles:
      return "fixed-roles";
    case StrategyKind::FullAlgorithm1:
      return "full";
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view text) {
  if (text == "1" || text == "no-learning") return StrategyKind::NoLearning;
  if (text == "2" || text == "fixed-roles") return StrategyKind::LearningFixedRoles;
  if (text == "3" || text == "full") return StrategyKind::FullAlgorithm1;
  throw std::invalid_argument("unknown strategy '" + std::string(text) + "'");
}

bool learning_enabled(StrategyKind s) { return s != StrategyKind::NoLearning; }
bool switching_enabled(StrategyKind s) { return s == StrategyKind::FullAlgorithm1; }

int Schedule::periods() const { return static_cast<int>(std::lround(duration / period)); }

void Schedule::validate() const {
  if (!(period > 0.0) || !(delay > 0.0) || !(delay < period)) {
    throw std::invalid_argument("schedule needs 0 < delay < period");
  }
  const double ratio = duration / period;
  if (!(duration > 0.0) || std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("task duration must be an integer multiple of the period");
  }
}

void SimulationConfig::validate() const {
  rod.validate();
  schedule.validate();
  follower.validate();
  mpc.validate();
  sensor.validate();
  if (mpc.period != schedule.period) {
    throw std::invalid_argument("MPC period must equal the control period");
  }
  if (!(mpc.bounds == follower.bounds)) {
    throw std::invalid_argument("leader and follower must share input bounds");
  }
  if (mpc.assist_gain != follower.assist_gain) {
    throw std::invalid_argument("MPC must predict the follower's assist gain");
  }
  if (!(switch_distance >= 0.0) || !(success_radius > 0.0) || !(cloud_resolution > 0.0) ||
      !(reaction_tolerance > 0.0)) {
    throw std::invalid_argument("switch distance, success radius, cloud resolution and reaction tolerance must be positive");
  }
}

World make_world(const SimulationConfig& cfg, Workspace workspace, const JointState& initial) {
  World world{std::move(workspace), initial, {}, {}, 0};
  for (auto& a : world.agents) {
    a.cloud = PointCloud(cfg.cloud_resolution);
  }
  return world;
}

Vec2 agent_position(const RodParams& rod, const JointState& canonical, AgentId id) {
  return id == AgentId::A ? canonical.position() : leader_view_of_follower(rod, canonical);
}

JointState to_leader_frame(const RodParams& rod, const JointState& canonical, AgentId leader) {
  return leader == AgentId::A ? canonical : swap_view(rod, canonical);
}

JointState from_leader_frame(const RodParams& rod, const JointState& leader_state, AgentId leader) {
  return leader == AgentId::A ? leader_state : swap_view(rod.swapped(), leader_state);
}

RodParams leader_params(const RodParams& rod, AgentId leader) {
  return leader == AgentId::A ? rod : rod.swapped();
}

int evaluate_switch(const Vec2& follower_pos, const std::optional<Vec2>& obstacle, double threshold) {
  return obstacle && (follower_pos - *obstacle).norm() <= threshold ? 1 : 0;
}

RoleState apply_switch(const RoleState& role) {
  if (!role.pending_switch) {
    return role;
  }
  return {other(role.leader), role.switch_count + 1, false};
}

PeriodEvents step_period(World& world, const SimulationConfig& cfg, StrategyKind strategy) {
  PeriodEvents ev;
  const RodParams& rod = cfg.rod;
  const double period = cfg.schedule.period;
  const double delay = cfg.schedule.delay;
  const double t0 = world.step * period;
  const int step = world.step + 1;

  if (world.roles.pending_switch) {
    world.roles = apply_switch(world.roles);
    ev.switched = true;
  }
  const AgentId lead = world.roles.leader;
  const AgentId foll = other(lead);
  const RodParams params = leader_params(rod, lead);
  AgentState& leader = world.agent(lead);
  AgentState& follower = world.agent(foll);
  if (ev.switched) {
    leader.warm_start.reset();
    follower.warm_start.reset();
  }

  // Both agents sense from their own position at the start of the period.
  for (const AgentId id : {AgentId::A, AgentId::B}) {
    const SenseResult r = sense(world.workspace, agent_position(rod, world.state, id), cfg.sensor);
    if (r.blocked) {
      ev.collision = true;
      return ev;
    }
    world.agent(id).cloud = accumulate(std::move(world.agent(id).cloud), r.hits, sensed_source(id, lead), step);
  }

  // Leader plans on its own cloud.
  const JointState s0 = to_leader_frame(rod, world.state, lead);
  const std::vector<Vec2> leader_cloud = leader.cloud.positions();
  ev.leader_cloud_size = leader_cloud.size();
  const TrackingReference ref = lead == AgentId::A ? TrackingReference::Self : TrackingReference::OppositeEnd;
  ev.mpc = solve(params, cfg.mpc, s0, leader_cloud, leader.warm_start, ref);
  leader.warm_start = shifted_warm_start(ev.mpc);
  const Wrench u = first_input(ev.mpc);

  // The follower keeps its previous input until it has inferred u.
  const Wrench v_prev = to_frame(follower.last_input, lead);
  const JointState s1 = euler_substep(params, s0, u, v_prev, delay);
  world.state = from_leader_frame(rod, s1, lead);
  ev.substeps.push_back({step, SubstepPhase::AfterDelay, t0 + delay, lead, world.state, u, v_prev, std::nullopt,
                         ev.switched});
  if (collides(world, rod)) {
    ev.collision = true;
    return ev;
  }

  // Follower: estimate the joint state from its own measurements, infer u,
  // and react to its nearest obstacle.
  const auto follower_estimate = [&](const JointState& s) {
    const FollowerMeasurement m{leader_view_of_follower(params, s), follower_velocity(params, s)};
    return follower_view(params, m, s.theta(), s.omega());
  };
  const JointState f0 = follower_estimate(s0);
  const JointState f1 = follower_estimate(s1);
  const Wrench u_hat = infer_leader_input(params, f0, f1, v_prev, delay);
  const Vec2 follower_pos = leader_view_of_follower(params, f1);
  const std::vector<Vec2> follower_cloud = follower.cloud.positions();
  ev.follower_critical = select_critical(follower_cloud, follower_pos, follower_velocity(params, f1),
                                         f1.position(), cfg.follower);
  const Wrench v = reactive_input(u_hat, ev.follower_critical, cfg.follower);

  const double window = period - delay;
  const JointState s2 = euler_substep(params, s1, u, v, window);
  world.state = from_leader_frame(rod, s2, lead);

  // Leader decodes the follower's reaction over the second sub-step.
  const InferenceResult inference =
      infer_obstacle(params, cfg.follower, s1, s2, u, window, cfg.reaction_tolerance);
  if (inference.obstacle) {
    ev.inferred = inference.obstacle->point;
  }
  if (learning_enabled(strategy) && ev.inferred) {
    leader.cloud.insert({*ev.inferred, PointSource::Inferred, step});
  }
  ev.substeps.push_back(
      {step, SubstepPhase::PeriodEnd, t0 + period, lead, world.state, u, v, ev.inferred, false});

  leader.last_input = from_frame(u, lead);
  follower.last_input = from_frame(v, lead);
  world.step = step;

  if (collides(world, rod)) {
    ev.collision = true;
    return ev;
  }

  ev.follower_vote = evaluate_switch(follower_pos, ev.follower_critical
                                                       ? std::optional<Vec2>(ev.follower_critical->point)
                                                       : std::nullopt,
                                     cfg.switch_distance);
  ev.leader_vote = evaluate_switch(leader_view_of_follower(params, s1), ev.inferred, cfg.switch_distance);
  if (switching_enabled(strategy)) {
    if (ev.follower_vote != ev.leader_vote) {
      throw ConsistencyError("leader and follower disagree on the role switch at step " + std::to_string(step));
    }
    world.roles.pending_switch = ev.follower_vote == 1;
  }
  return ev;
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Success:
      return "success";
    case Outcome::Collision:
      return "collision";
    case Outcome::Timeout:
      return "timeout";
    case Outcome::Aborted:
      return "aborted";
  }
  return "unknown";
}

Outcome parse_outcome(std::string_view text) {
  for (const Outcome o : {Outcome::Success, Outcome::Collision, Outcome::Timeout, Outcome::Aborted}) {
    if (text == to_string(o)) {
      return o;
    }
  }
  throw std::invalid_argument("unknown outcome '" + std::string(text) + "'");
}

Classification classify(std::span<const SubstepRecord> trajectory, const Workspace& workspace,
                        const RodParams& rod, const Vec2& target, double radius, int periods) {
  for (const auto& r : trajectory) {
    if (rod_collides(workspace, agent_position(rod, r.state, AgentId::A),
                     agent_position(rod, r.state, AgentId::B))) {
      return {Outcome::Collision, r.step};
    }
  }
  for (const auto& r : trajectory) {
    if (r.phase != SubstepPhase::AfterDelay && r.step <= periods &&
        (r.state.position() - target).norm() <= radius) {
      return {Outcome::Success, r.step};
    }
  }
  return {Outcome::Timeout, periods};
}

TrialRecord simulate(const SimulationConfig& cfg, const Workspace& workspace, const JointState& initial,
                     StrategyKind strategy) {
  World world = make_world(cfg, workspace, initial);
  TrialRecord rec;
  rec.trajectory.push_back({0, SubstepPhase::Initial, 0.0, AgentId::A, initial, {}, {}, std::nullopt, false});
  const Vec2 target = cfg.mpc.target.position();
  const int periods = cfg.schedule.periods();

  const auto finish = [&](Outcome o, int steps) {
    rec.outcome = o;
    rec.steps = steps;
    rec.cloud_a = world.agent(AgentId::A).cloud;
    rec.cloud_b = world.agent(AgentId::B).cloud;
    rec.switch_count = world.roles.switch_count;
    return rec;
  };

  if (collides(world, cfg.rod)) {
    return finish(Outcome::Collision, 0);
  }
  if ((initial.position() - target).norm() <= cfg.success_radius) {
    return finish(Outcome::Success, 0);
  }
  while (world.step < periods) {
    PeriodEvents ev;
    try {
      ev = step_period(world, cfg, strategy);
    } catch (const std::exception& e) {
      rec.diagnostic = e.what();
      return finish(Outcome::Aborted, world.step);
    }
    rec.trajectory.insert(rec.trajectory.end(), ev.substeps.begin(), ev.substeps.end());
    if (ev.collision) {
      return finish(Outcome::Collision, world.step + (ev.substeps.size() < 2 ? 1 : 0));
    }
    if ((world.state.position() - target).norm() <= cfg.success_radius) {
      return finish(Outcome::Success, world.step);
    }
  }
  return finish(Outcome::Timeout, periods);
}

}  // namespace rodsim
