#pragma once

#include <optional>
#include <span>

#include "rodsim/environment.hpp"
#include "rodsim/follower_policy.hpp"

namespace rodsim {

/// Residual norm (N) below which the follower is taken to be purely assisting.
inline constexpr double kReactionTolerance = 1e-6;

/// Recovers the follower's wrench from two leader-referenced states one Euler
/// step apart, given the leader's own input over the window. All three
/// components are solved from the velocity and angular-rate increments.
Wrench infer_follower_input(const RodParams& params, const JointState& before, const JointState& after,
                            const Wrench& leader_input, double window);

/// Obstacle point reconstructed from the follower's reactive input.
struct InferredObstacle {
  Vec2 point = Vec2::Zero();
  double distance = 0.0;
  double angle = 0.0;
};

enum class RecoveryStatus { None, Recovered, InconsistentResidual };

struct RecoveryResult {
  RecoveryStatus status = RecoveryStatus::None;
  std::optional<InferredObstacle> obstacle;
};

/// Decodes (distance, angle) from the axial/perpendicular residual
/// (v_hat - K2 u) and places the point relative to the follower position
/// implied by `leader_state`.
RecoveryResult recover_obstacle(const FollowerConfig& cfg, const Eigen::Vector2d& residual,
                                const JointState& leader_state, const RodParams& params,
                                double tolerance = kReactionTolerance);

struct InferenceResult {
  Wrench v_hat;
  /// (v_hat.axial - K2 u.axial, v_hat.perpendicular - K2 u.perpendicular).
  Eigen::Vector2d residual = Eigen::Vector2d::Zero();
  std::optional<InferredObstacle> obstacle;
  RecoveryStatus status = RecoveryStatus::None;
  /// The follower never applies reactive torque, so v_hat.torque == K2 u.torque.
  bool torque_consistent = true;
};

/// Full leader-side decoding for one control period. `at_delay` is the
/// leader's state when the follower switched input, `at_end` the state at the
/// end of the window.
InferenceResult infer_obstacle(const RodParams& params, const FollowerConfig& cfg, const JointState& at_delay,
                               const JointState& at_end, const Wrench& leader_input, double window,
                               double tolerance = kReactionTolerance);

/// Merges newly sensed points and the optional inferred point into the cloud.
PointCloud update_known_obstacles(PointCloud cloud, std::span<const Vec2> newly_sensed,
                                  const std::optional<Vec2>& inferred, int step = 0,
                                  PointSource sensed_as = PointSource::LeaderSensed);

}  // namespace rodsim
