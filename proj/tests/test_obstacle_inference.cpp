#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "rodsim/obstacle_inference.hpp"

using namespace rodsim;

namespace {

constexpr double kPi = std::numbers::pi;

JointState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(2.0, 7.0);
  std::uniform_real_distribution<double> vel(-0.5, 0.5);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  return JointState::make(pos(rng), vel(rng), pos(rng), vel(rng), ang(rng), vel(rng));
}

Wrench random_wrench(std::mt19937_64& rng, const InputBounds& b) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {b.axial * u(rng), b.perpendicular * u(rng), b.torque * u(rng)};
}

}  // namespace

TEST(InferFollowerInput, RecoversInputFromEulerIncrement) {
  const RodParams params;
  const InputBounds bounds;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 500; ++i) {
    const JointState s = random_state(rng);
    const Wrench u = random_wrench(rng, bounds);
    const Wrench v = random_wrench(rng, bounds);
    const JointState next = euler_substep(params, s, u, v, 0.01);
    const Wrench est = infer_follower_input(params, s, next, u, 0.01);
    EXPECT_NEAR(est.axial, v.axial, 1e-9);
    EXPECT_NEAR(est.perpendicular, v.perpendicular, 1e-9);
    EXPECT_NEAR(est.torque, v.torque, 1e-9);
  }
  EXPECT_THROW(infer_follower_input(params, JointState{}, JointState{}, {}, -1.0), std::invalid_argument);
}

TEST(RecoverObstacle, SmallResidualMeansNoObstacle) {
  const FollowerConfig cfg;
  const RodParams params;
  const auto r = recover_obstacle(cfg, {5e-7, 0.0}, JointState{}, params);
  EXPECT_EQ(r.status, RecoveryStatus::None);
  EXPECT_FALSE(r.obstacle);
}

TEST(RecoverObstacle, ResidualLargerThanAnyReactionIsInconsistent) {
  const FollowerConfig cfg;
  const RodParams params;
  // Largest reactive magnitude is Fa (1 - K2) = 2.5.
  const auto r = recover_obstacle(cfg, {3.0, 0.0}, JointState{}, params);
  EXPECT_EQ(r.status, RecoveryStatus::InconsistentResidual);
  EXPECT_FALSE(r.obstacle);
}

TEST(RecoverObstacle, InvertsReactiveTerm) {
  const FollowerConfig cfg;
  const RodParams params;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(0.0, cfg.critical_radius - 1e-3);
  std::uniform_real_distribution<double> phi(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const JointState s = random_state(rng);
    const double dist = d(rng);
    const double angle = phi(rng);
    const Wrench w = reactive_term(cfg, dist, angle);
    const auto r = recover_obstacle(cfg, {w.axial, w.perpendicular}, s, params);
    ASSERT_EQ(r.status, RecoveryStatus::Recovered);
    EXPECT_NEAR(r.obstacle->distance, dist, 1e-12);
    EXPECT_NEAR(wrap_angle(r.obstacle->angle - angle), 0.0, 1e-9);
    const Vec2 follower = s.position() - params.length() * Vec2(std::cos(s.theta()), std::sin(s.theta()));
    const Vec2 truth = follower + dist * Vec2(std::cos(s.theta() - angle), std::sin(s.theta() - angle));
    EXPECT_LT((r.obstacle->point - truth).norm(), 1e-9);
  }
}

TEST(InferObstacle, EndToEndFromFollowerReaction) {
  const FollowerConfig cfg;
  const RodParams params;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> r(0.05, 1.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 500; ++i) {
    const JointState s = random_state(rng);
    const Vec2 follower = leader_view_of_follower(params, s);
    const double a = ang(rng);
    const Vec2 obstacle = follower + r(rng) * Vec2(std::cos(a), std::sin(a));
    const std::vector<Vec2> cloud{obstacle};
    const auto crit = select_critical(cloud, follower, follower_velocity(params, s), s.position(), cfg);
    ASSERT_TRUE(crit);
    const Wrench u = random_wrench(rng, cfg.bounds);
    const Wrench v = reactive_input(u, crit, cfg);
    const JointState end = euler_substep(params, s, u, v, 0.01);
    const InferenceResult res = infer_obstacle(params, cfg, s, end, u, 0.01);
    ASSERT_EQ(res.status, RecoveryStatus::Recovered);
    EXPECT_TRUE(res.torque_consistent);
    EXPECT_LT((res.obstacle->point - obstacle).norm(), 1e-6);
  }
}

TEST(InferObstacle, PureAssistYieldsNothing) {
  const FollowerConfig cfg;
  const RodParams params;
  const JointState s = JointState::make(5, 0.1, 5, -0.2, 0.4, 0.05);
  const Wrench u{3.0, -1.0, 0.2};
  const Wrench v = reactive_input(u, std::nullopt, cfg);
  const JointState end = euler_substep(params, s, u, v, 0.01);
  const InferenceResult res = infer_obstacle(params, cfg, s, end, u, 0.01);
  EXPECT_EQ(res.status, RecoveryStatus::None);
  EXPECT_FALSE(res.obstacle);
  EXPECT_LT(res.residual.norm(), kReactionTolerance);
}

TEST(InferObstacle, TorqueMismatchIsFlagged) {
  const FollowerConfig cfg;
  const RodParams params;
  const JointState s = JointState::make(5, 0, 5, 0, 0.0, 0);
  const Wrench u{1.0, 0.0, 0.0};
  const Wrench v{0.5, 0.0, 0.3};
  const JointState end = euler_substep(params, s, u, v, 0.01);
  EXPECT_FALSE(infer_obstacle(params, cfg, s, end, u, 0.01).torque_consistent);
}

TEST(UpdateKnownObstacles, TagsSourcesAndDeduplicates) {
  PointCloud cloud;
  const std::vector<Vec2> sensed{{1, 1}, {2, 2}};
  cloud = update_known_obstacles(std::move(cloud), sensed, Vec2(3, 3), 4);
  ASSERT_EQ(cloud.size(), 3u);
  EXPECT_EQ(cloud.points()[0].source, PointSource::LeaderSensed);
  EXPECT_EQ(cloud.points()[2].source, PointSource::Inferred);
  EXPECT_EQ(cloud.points()[2].step, 4);
  cloud = update_known_obstacles(std::move(cloud), sensed, Vec2(3.001, 3), 5, PointSource::FollowerSensed);
  EXPECT_EQ(cloud.size(), 3u);
  cloud = update_known_obstacles(std::move(cloud), {}, std::nullopt, 6);
  EXPECT_EQ(cloud.size(), 3u);
}
