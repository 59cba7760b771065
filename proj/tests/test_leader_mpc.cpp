#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "rodsim/leader_mpc.hpp"

using namespace rodsim;

namespace {

constexpr double kPi = std::numbers::pi;

MpcConfig bounded_config() {
  MpcConfig cfg;
  cfg.workspace_bounds = Bounds{};
  return cfg;
}

double hinge(const MpcConfig& cfg, double d) {
  return d >= cfg.safe_distance ? 0.0 : cfg.obstacle_weight * (cfg.safe_distance - d) * (cfg.safe_distance - d);
}

// Straightforward restatement of the horizon cost on top of predict().
double oracle_cost(const RodParams& params, const MpcConfig& cfg, const JointState& initial,
                   const std::vector<Vec2>& cloud, const std::vector<Wrench>& inputs, TrackingReference ref) {
  const std::vector<JointState> states = predict(params, cfg, initial, inputs);
  double total = 0.0;
  for (int k = 0; k < cfg.horizon; ++k) {
    const Wrench& u = inputs[k];
    total += cfg.input_weight[0] * u.axial * u.axial + cfg.input_weight[1] * u.perpendicular * u.perpendicular +
             cfg.input_weight[2] * u.torque * u.torque;
    const JointState& s = states[k + 1];
    const JointState tracked = ref == TrackingReference::Self ? s : swap_view(params, s);
    for (int i = 0; i < 6; ++i) {
      const double e = tracked.values[i] - cfg.target.values[i];
      total += cfg.state_weight[i] * e * e;
    }
    const Vec2 lead = s.position();
    const Vec2 foll = leader_view_of_follower(params, s);
    for (const double a : cfg.alpha_samples) {
      const Vec2 p = a * lead + (1.0 - a) * foll;
      if (!cloud.empty()) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : cloud) best = std::min(best, (c - p).norm());
        total += hinge(cfg, best);
      }
      if (cfg.workspace_bounds) {
        const Bounds& b = *cfg.workspace_bounds;
        total += hinge(cfg, p.x() - b.min_x) + hinge(cfg, b.max_x - p.x()) + hinge(cfg, p.y() - b.min_y) +
                 hinge(cfg, b.max_y - p.y());
      }
    }
  }
  return total;
}

std::vector<Wrench> random_inputs(std::mt19937_64& rng, const MpcConfig& cfg) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Wrench> out;
  for (int k = 0; k < cfg.horizon; ++k) {
    out.push_back({cfg.bounds.axial * u(rng), cfg.bounds.perpendicular * u(rng), cfg.bounds.torque * u(rng)});
  }
  return out;
}

JointState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.5, 8.5);
  std::uniform_real_distribution<double> vel(-0.5, 0.5);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  return JointState::make(pos(rng), vel(rng), pos(rng), vel(rng), ang(rng), vel(rng));
}

std::vector<Vec2> random_cloud(std::mt19937_64& rng, const JointState& s, const RodParams& params) {
  std::uniform_real_distribution<double> off(-0.8, 0.8);
  std::uniform_real_distribution<double> a(0.0, 1.0);
  std::vector<Vec2> cloud;
  const Vec2 lead = s.position();
  const Vec2 foll = leader_view_of_follower(params, s);
  for (int i = 0; i < 15; ++i) {
    const double t = a(rng);
    cloud.push_back(t * lead + (1 - t) * foll + Vec2(off(rng), off(rng)));
  }
  return cloud;
}

}  // namespace

TEST(MpcConfig, DefaultsAndValidation) {
  MpcConfig cfg;
  EXPECT_EQ(cfg.horizon, 3);
  EXPECT_EQ(cfg.gradient, GradientMode::FiniteDifference);
  EXPECT_NO_THROW(cfg.validate());
  cfg.alpha_samples = {0.0, 0.5};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.horizon = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.safe_distance = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.state_weight[2] = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Predict, UsesAssistedFollowerAndPeriod) {
  const RodParams params;
  const MpcConfig cfg;
  const JointState s0 = JointState::make(5, 0, 5, 0, 0.3, 0);
  const std::vector<Wrench> u{{1, 0, 0}, {0, 1, 0}, {0, 0, 0.1}};
  const auto states = predict(params, cfg, s0, u);
  ASSERT_EQ(states.size(), 4u);
  EXPECT_EQ(states[0], s0);
  JointState manual = s0;
  for (const auto& w : u) manual = euler_substep(params, manual, w, 0.5 * w, 0.03);
  EXPECT_EQ(states[3], manual);
  EXPECT_THROW(predict(params, cfg, s0, std::vector<Wrench>(2)), std::invalid_argument);
}

TEST(ObstaclePenalty, HandComputedExamples) {
  MpcConfig cfg;
  const Vec2 lead(5, 5);
  const Vec2 foll(3.4, 5);
  EXPECT_EQ(obstacle_penalty(cfg, lead, foll, {}), 0.0);
  // Point sitting on the leader: 0.5 margin at alpha=1, 0.1 at alpha=0.75.
  const std::vector<Vec2> on_leader{lead};
  EXPECT_NEAR(obstacle_penalty(cfg, lead, foll, on_leader), 500 * 0.25 + 500 * 0.01, 1e-9);
  const std::vector<Vec2> beside{{4.2, 5.3}};
  EXPECT_NEAR(obstacle_penalty(cfg, lead, foll, beside), 500 * 0.2 * 0.2, 1e-9);
  const std::vector<Vec2> far{{4.2, 5.6}};
  EXPECT_EQ(obstacle_penalty(cfg, lead, foll, far), 0.0);
}

TEST(MpcCost, MatchesOracle) {
  const RodParams params;
  std::mt19937_64 rng(12);
  for (int i = 0; i < 300; ++i) {
    const MpcConfig cfg = i % 2 ? bounded_config() : MpcConfig{};
    const JointState s = random_state(rng);
    const auto cloud = i % 3 ? random_cloud(rng, s, params) : std::vector<Vec2>{};
    const auto u = random_inputs(rng, cfg);
    for (const auto ref : {TrackingReference::Self, TrackingReference::OppositeEnd}) {
      const double expected = oracle_cost(params, cfg, s, cloud, u, ref);
      EXPECT_NEAR(mpc_cost(params, cfg, s, cloud, u, ref), expected, 1e-9 * std::max(1.0, expected));
    }
  }
}

TEST(MpcGradient, AutomaticMatchesFiniteDifference) {
  const RodParams params;
  std::mt19937_64 rng(13);
  MpcConfig cfg = bounded_config();
  for (int i = 0; i < 100; ++i) {
    const JointState s = random_state(rng);
    const auto cloud = random_cloud(rng, s, params);
    const auto u = random_inputs(rng, cfg);
    const auto ref = i % 2 ? TrackingReference::Self : TrackingReference::OppositeEnd;
    const Eigen::VectorXd ad = mpc_gradient(params, cfg, s, cloud, u, ref, GradientMode::Automatic);
    const Eigen::VectorXd fd = mpc_gradient(params, cfg, s, cloud, u, ref, GradientMode::FiniteDifference);
    ASSERT_EQ(ad.size(), 9);
    EXPECT_LE((ad - fd).norm(), 1e-4 * std::max(1.0, ad.norm())) << "sample " << i;
  }
}

TEST(Solve, StaysInBoundsAndNeverWorsens) {
  const RodParams params;
  std::mt19937_64 rng(14);
  for (int i = 0; i < 60; ++i) {
    MpcConfig cfg = bounded_config();
    if (i % 2) cfg.gradient = GradientMode::Automatic;
    const JointState s = random_state(rng);
    const auto cloud = random_cloud(rng, s, params);
    const auto warm = random_inputs(rng, cfg);
    const MpcSolution sol = solve(params, cfg, s, cloud, warm);
    ASSERT_EQ(sol.inputs.size(), 3u);
    for (const auto& u : sol.inputs) EXPECT_TRUE(cfg.bounds.contains(u));
    const double zero = mpc_cost(params, cfg, s, cloud, std::vector<Wrench>(3));
    const double warm_cost = mpc_cost(params, cfg, s, cloud, warm);
    EXPECT_LE(sol.cost, std::min(zero, warm_cost) + 1e-12);
    EXPECT_NEAR(sol.cost, mpc_cost(params, cfg, s, cloud, sol.inputs), 1e-9 * std::max(1.0, sol.cost));
    for (std::size_t k = 1; k < sol.cost_trace.size(); ++k) {
      EXPECT_LE(sol.cost_trace[k], sol.cost_trace[k - 1]);
    }
    EXPECT_EQ(sol.predicted_states, predict(params, cfg, s, sol.inputs));
    EXPECT_LE(sol.iterations, cfg.max_iterations);
  }
}

TEST(Solve, DrivesTowardTarget) {
  const RodParams params;
  const MpcConfig cfg;
  const JointState s = JointState::make(4.0, 0, 4.95, 0, 0, 0);
  const MpcSolution sol = solve(params, cfg, s, {});
  // Target is down-left, so the planned leader acceleration points there too.
  const JointState& end = sol.predicted_states.back();
  EXPECT_LT(end.vx(), 0.0);
  EXPECT_LT(end.vy(), 0.0);
  EXPECT_LT(sol.cost, mpc_cost(params, cfg, s, {}, std::vector<Wrench>(3)));
  EXPECT_TRUE(sol.converged);
}

TEST(Solve, AtTargetStaysPut) {
  const RodParams params;
  const MpcConfig cfg;
  const MpcSolution sol = solve(params, cfg, cfg.target, {});
  for (const auto& u : sol.inputs) EXPECT_LT(u.vec().norm(), 1e-6);
}

TEST(Solve, RejectsNonFiniteState) {
  const RodParams params;
  const MpcConfig cfg;
  JointState bad;
  bad.values[0] = std::nan("");
  EXPECT_THROW(solve(params, cfg, bad, {}), std::invalid_argument);
}

TEST(Solve, IgnoresDistantCloudPoints) {
  const RodParams params;
  const MpcConfig cfg;
  const JointState s = JointState::make(6, 0, 6, 0, 0.5, 0);
  const std::vector<Vec2> far{{0.5, 0.5}, {8.5, 0.5}};
  const MpcSolution a = solve(params, cfg, s, {});
  const MpcSolution b = solve(params, cfg, s, far);
  EXPECT_EQ(a.inputs, b.inputs);
}

TEST(WarmStart, ShiftRepeatsLastStage) {
  MpcSolution sol;
  sol.inputs = {{1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  const auto w = shifted_warm_start(sol);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0].axial, 2);
  EXPECT_EQ(w[1].axial, 3);
  EXPECT_EQ(w[2].axial, 3);
  EXPECT_EQ(first_input(sol).axial, 1);
  EXPECT_THROW(first_input(MpcSolution{}), std::invalid_argument);
  EXPECT_TRUE(shifted_warm_start(MpcSolution{}).empty());
}
