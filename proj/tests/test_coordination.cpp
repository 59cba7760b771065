#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "rodsim/coordination.hpp"
#include "rodsim/scenario.hpp"

using namespace rodsim;

namespace {

Obstacle box(double x0, double y0, double x1, double y1) {
  return Obstacle({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

SubstepRecord sample(int step, SubstepPhase phase, double t, const JointState& s) {
  SubstepRecord r;
  r.step = step;
  r.phase = phase;
  r.t = t;
  r.state = s;
  return r;
}

SimulationConfig bounded_config() {
  SimulationConfig cfg;
  cfg.mpc.workspace_bounds = Bounds{};
  return cfg;
}

}  // namespace

TEST(Strategy, NamesAndFlags) {
  EXPECT_EQ(parse_strategy("1"), StrategyKind::NoLearning);
  EXPECT_EQ(parse_strategy("fixed-roles"), StrategyKind::LearningFixedRoles);
  EXPECT_EQ(parse_strategy("3"), StrategyKind::FullAlgorithm1);
  for (const auto s : {StrategyKind::NoLearning, StrategyKind::LearningFixedRoles, StrategyKind::FullAlgorithm1}) {
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  }
  EXPECT_THROW(parse_strategy("4"), std::invalid_argument);
  EXPECT_FALSE(learning_enabled(StrategyKind::NoLearning));
  EXPECT_TRUE(learning_enabled(StrategyKind::LearningFixedRoles));
  EXPECT_FALSE(switching_enabled(StrategyKind::LearningFixedRoles));
  EXPECT_TRUE(switching_enabled(StrategyKind::FullAlgorithm1));
  EXPECT_EQ(parse_outcome("timeout"), Outcome::Timeout);
  EXPECT_THROW(parse_outcome("win"), std::invalid_argument);
}

TEST(Schedule, NinetyPeriods) {
  const Schedule s;
  EXPECT_EQ(s.periods(), 90);
  EXPECT_NO_THROW(s.validate());
  EXPECT_THROW((Schedule{0.03, 0.03, 2.7}).validate(), std::invalid_argument);
  EXPECT_THROW((Schedule{0.03, 0.02, 2.71}).validate(), std::invalid_argument);
}

TEST(SimulationConfig, SharedParametersMustAgree) {
  SimulationConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.mpc.period = 0.05;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.follower.bounds.axial = 4.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.mpc.assist_gain = 0.4;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Frames, AgentPositionsAndRoundTrip) {
  const RodParams rod;
  const JointState s = JointState::make(5, 0.2, 4, -0.1, 0.3, 0.4);
  EXPECT_EQ(agent_position(rod, s, AgentId::A), Vec2(5, 4));
  const Vec2 b = agent_position(rod, s, AgentId::B);
  EXPECT_NEAR((Vec2(5, 4) - b).norm(), 1.6, 1e-12);
  const JointState from_b = to_leader_frame(rod, s, AgentId::B);
  EXPECT_LT((from_b.position() - b).norm(), 1e-12);
  const JointState back = from_leader_frame(rod, from_b, AgentId::B);
  EXPECT_LT((back.values - s.values).norm(), 1e-12);
  EXPECT_EQ(to_leader_frame(rod, s, AgentId::A), s);
  EXPECT_EQ(leader_params(rod, AgentId::B), rod.swapped());
}

TEST(Switching, RuleAndLatch) {
  EXPECT_EQ(evaluate_switch({0, 0}, std::nullopt, 0.8), 0);
  EXPECT_EQ(evaluate_switch({0, 0}, Vec2(0.8, 0), 0.8), 1);
  EXPECT_EQ(evaluate_switch({0, 0}, Vec2(0.81, 0), 0.8), 0);
  RoleState r;
  EXPECT_EQ(apply_switch(r).leader, AgentId::A);
  r.pending_switch = true;
  const RoleState next = apply_switch(r);
  EXPECT_EQ(next.leader, AgentId::B);
  EXPECT_EQ(next.switch_count, 1);
  EXPECT_FALSE(next.pending_switch);
}

TEST(StepPeriod, ObstacleFreeFollowerOnlyAssists) {
  const SimulationConfig cfg = bounded_config();
  World world = make_world(cfg, Workspace{}, JointState::make(7.5, 0, 7.2, 0, 0.1, 0));
  for (int k = 0; k < 10; ++k) {
    const PeriodEvents ev = step_period(world, cfg, StrategyKind::FullAlgorithm1);
    ASSERT_EQ(ev.substeps.size(), 2u);
    const SubstepRecord& end = ev.substeps[1];
    // Inferred u_hat equals u, so the follower applies exactly K2 u.
    EXPECT_LT((end.v.vec() - 0.5 * end.u.vec()).norm(), 1e-9);
    EXPECT_FALSE(ev.inferred);
    EXPECT_FALSE(ev.follower_critical);
    EXPECT_EQ(ev.follower_vote, 0);
    EXPECT_EQ(ev.leader_vote, 0);
    EXPECT_EQ(world.step, k + 1);
    EXPECT_NEAR(end.t, 0.03 * (k + 1), 1e-12);
    EXPECT_NEAR(ev.substeps[0].t, 0.03 * k + 0.02, 1e-12);
  }
  EXPECT_TRUE(world.agent(AgentId::A).cloud.empty());
}

TEST(StepPeriod, FirstPeriodFollowerHoldsZeroInput) {
  const SimulationConfig cfg = bounded_config();
  World world = make_world(cfg, Workspace{}, JointState::make(7.5, 0, 7.2, 0, 0.1, 0));
  const PeriodEvents ev = step_period(world, cfg, StrategyKind::NoLearning);
  EXPECT_EQ(ev.substeps[0].v, Wrench{});
  // The first sub-step uses the leader's input with no follower help.
  const JointState manual = euler_substep(cfg.rod, JointState::make(7.5, 0, 7.2, 0, 0.1, 0), ev.substeps[0].u,
                                          Wrench{}, 0.02);
  EXPECT_EQ(ev.substeps[0].state, manual);
}

TEST(StepPeriod, LeaderLearnsExactlyWhatTheFollowerReactedTo) {
  const Scenario sc = default_scenario();
  for (const auto strategy : {StrategyKind::NoLearning, StrategyKind::LearningFixedRoles,
                              StrategyKind::FullAlgorithm1}) {
    World world = make_world(sc.config, sc.workspace, sc.initial);
    int inferred = 0;
    std::size_t last_a = 0;
    std::size_t last_b = 0;
    AgentId leader = AgentId::A;
    while (world.step < sc.config.schedule.periods()) {
      const PeriodEvents ev = step_period(world, sc.config, strategy);
      if (ev.collision) break;
      EXPECT_EQ(ev.follower_vote, ev.leader_vote);
      EXPECT_EQ(ev.inferred.has_value(), ev.follower_critical.has_value());
      if (ev.inferred) {
        ++inferred;
        EXPECT_LT((*ev.inferred - ev.follower_critical->point).norm(), 1e-6);
      }
      if (ev.switched) {
        EXPECT_NE(world.roles.leader, leader);
        leader = world.roles.leader;
      }
      if (!switching_enabled(strategy)) {
        EXPECT_EQ(world.roles.leader, AgentId::A);
      }
      for (const auto& r : ev.substeps) {
        EXPECT_TRUE(r.state.finite());
        EXPECT_TRUE(sc.config.mpc.bounds.contains(r.u, 1e-12));
        EXPECT_TRUE(sc.config.follower.bounds.contains(r.v, 1e-12));
      }
      EXPECT_GE(world.agent(AgentId::A).cloud.size(), last_a);
      EXPECT_GE(world.agent(AgentId::B).cloud.size(), last_b);
      last_a = world.agent(AgentId::A).cloud.size();
      last_b = world.agent(AgentId::B).cloud.size();
    }
    bool any_inferred_in_cloud = false;
    for (const AgentId id : {AgentId::A, AgentId::B}) {
      for (const auto& p : world.agent(id).cloud.points()) {
        any_inferred_in_cloud = any_inferred_in_cloud || p.source == PointSource::Inferred;
      }
    }
    EXPECT_EQ(any_inferred_in_cloud, learning_enabled(strategy) && inferred > 0) << to_string(strategy);
  }
}

TEST(StepPeriod, SwitchFlipsLeaderAndKeepsStateContinuous) {
  const Scenario sc = default_scenario();
  World world = make_world(sc.config, sc.workspace, sc.initial);
  bool saw_switch = false;
  while (world.step < sc.config.schedule.periods() && !saw_switch) {
    const JointState before = world.state;
    const AgentId leader = world.roles.leader;
    // After a switch the old leader follows and holds its last input.
    const Wrench held = world.agent(leader).last_input;
    const PeriodEvents ev = step_period(world, sc.config, StrategyKind::FullAlgorithm1);
    if (ev.collision) break;
    if (ev.switched) {
      saw_switch = true;
      const AgentId now = world.roles.leader;
      EXPECT_EQ(now, other(leader));
      EXPECT_EQ(ev.substeps[0].leader, now);
      EXPECT_TRUE(ev.substeps[0].switched);
      const RodParams params = leader_params(sc.config.rod, now);
      const Wrench v_prev = now == AgentId::B ? swap_wrench(held) : held;
      EXPECT_EQ(ev.substeps[0].v, v_prev);
      const JointState expected = from_leader_frame(
          sc.config.rod,
          euler_substep(params, to_leader_frame(sc.config.rod, before, now), ev.substeps[0].u, v_prev, 0.02), now);
      EXPECT_LT((ev.substeps[0].state.values - expected.values).norm(), 1e-9);
    }
  }
  EXPECT_TRUE(saw_switch);
}

TEST(Classify, CollisionBeatsSuccessAndTimeoutUsesPeriods) {
  const RodParams rod;
  Workspace ws;
  ws.obstacles.push_back(box(4, 4, 5, 5));
  const Vec2 target(3, 3.95);
  std::vector<SubstepRecord> traj;
  traj.push_back(sample(0, SubstepPhase::Initial, 0, JointState::make(7, 0, 7, 0, 0, 0)));
  traj.push_back(sample(1, SubstepPhase::PeriodEnd, 0.03, JointState::make(3.1, 0, 3.9, 0, 0, 0)));
  EXPECT_EQ(classify(traj, ws, rod, target, 0.5, 90).outcome, Outcome::Success);
  EXPECT_EQ(classify(traj, ws, rod, target, 0.5, 90).steps, 1);
  traj.push_back(sample(2, SubstepPhase::PeriodEnd, 0.06, JointState::make(4.5, 0, 4.5, 0, 0, 0)));
  const Classification c = classify(traj, ws, rod, target, 0.5, 90);
  EXPECT_EQ(c.outcome, Outcome::Collision);
  EXPECT_EQ(c.steps, 2);
  traj.resize(1);
  EXPECT_EQ(classify(traj, ws, rod, target, 0.5, 90).outcome, Outcome::Timeout);
  EXPECT_EQ(classify(traj, ws, rod, target, 0.5, 90).steps, 90);
  // A mid-period sample inside the radius does not count as arrival.
  traj.push_back(sample(1, SubstepPhase::AfterDelay, 0.02, JointState::make(3.1, 0, 3.9, 0, 0, 0)));
  EXPECT_EQ(classify(traj, ws, rod, target, 0.5, 90).outcome, Outcome::Timeout);
}

TEST(Simulate, TrivialStarts) {
  SimulationConfig cfg = bounded_config();
  Workspace ws;
  ws.obstacles.push_back(box(7.0, 6.5, 8.0, 7.5));
  const TrialRecord hit = simulate(cfg, ws, JointState::make(7.5, 0, 7.2, 0, 0.1, 0), StrategyKind::FullAlgorithm1);
  EXPECT_EQ(hit.outcome, Outcome::Collision);
  EXPECT_EQ(hit.steps, 0);
  const TrialRecord home = simulate(cfg, Workspace{}, cfg.mpc.target, StrategyKind::NoLearning);
  EXPECT_EQ(home.outcome, Outcome::Success);
  EXPECT_EQ(home.steps, 0);
}

TEST(Simulate, ObstacleFreeRunReachesTargetWithoutLearning) {
  const Scenario sc = empty_scenario();
  const TrialRecord rec = simulate(sc.config, sc.workspace, sc.initial, StrategyKind::FullAlgorithm1);
  EXPECT_EQ(rec.outcome, Outcome::Success);
  EXPECT_GT(rec.steps, 0);
  EXPECT_LE(rec.steps, 90);
  EXPECT_EQ(rec.switch_count, 0);
  EXPECT_TRUE(rec.cloud_a.empty());
  // Time-optimal bound for the centre of mass starting at rest: it must cover
  // the leader's displacement minus the success radius and the arm length,
  // with acceleration at most |u + K2 u| / m.
  const RodParams& rod = sc.config.rod;
  const double reach = (sc.initial.position() - sc.config.mpc.target.position()).norm() -
                       sc.config.success_radius - rod.leader_arm - rod.follower_arm;
  const InputBounds& b = sc.config.follower.bounds;
  const double accel = (1.0 + sc.config.follower.assist_gain) * std::hypot(b.axial, b.perpendicular) / rod.total_mass();
  EXPECT_GE(rec.steps * sc.config.schedule.period, 2.0 * std::sqrt(reach / accel));
  for (const auto& r : rec.trajectory) EXPECT_FALSE(r.inferred_point);
  const Classification c = classify(rec.trajectory, sc.workspace, sc.config.rod, sc.config.mpc.target.position(),
                                    sc.config.success_radius, sc.config.schedule.periods());
  EXPECT_EQ(c.outcome, rec.outcome);
  EXPECT_EQ(c.steps, rec.steps);
}

TEST(Simulate, DeterministicAndConsistentWithClassifier) {
  const Scenario sc = default_scenario();
  for (const auto strategy : {StrategyKind::NoLearning, StrategyKind::LearningFixedRoles,
                              StrategyKind::FullAlgorithm1}) {
    const TrialRecord a = simulate(sc.config, sc.workspace, sc.initial, strategy);
    const TrialRecord b = simulate(sc.config, sc.workspace, sc.initial, strategy);
    EXPECT_EQ(a.outcome, b.outcome);
    EXPECT_EQ(a.trajectory, b.trajectory);
    ASSERT_NE(a.outcome, Outcome::Aborted) << a.diagnostic;
    const Classification c = classify(a.trajectory, sc.workspace, sc.config.rod, sc.config.mpc.target.position(),
                                      sc.config.success_radius, sc.config.schedule.periods());
    EXPECT_EQ(c.outcome, a.outcome) << to_string(strategy);
    EXPECT_EQ(c.steps, a.steps) << to_string(strategy);
    for (std::size_t i = 1; i < a.trajectory.size(); ++i) {
      EXPECT_GT(a.trajectory[i].t, a.trajectory[i - 1].t);
    }
  }
}
