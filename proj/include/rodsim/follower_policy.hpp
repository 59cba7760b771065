#pragma once

#include <optional>
#include <span>
#include <stdexcept>

#include "rodsim/dynamics.hpp"

namespace rodsim {

/// Follower policy parameters. The reactive gain is derived so that the
/// follower only saturates when touching its critical obstacle.
struct FollowerConfig {
  double critical_radius = 1.1;
  double assist_gain = 0.5;
  InputBounds bounds;

  /// Diagonal of K1: (Fa(1 - K2) / d_cr, Fp(1 - K2) / d_cr, 0).
  Eigen::Vector3d reactive_gains() const;
  void validate() const;
};

/// Nearest sensed point within the critical radius of the follower.
struct CriticalObstacle {
  Vec2 point = Vec2::Zero();
  /// Distance from the follower.
  double distance = 0.0;
  /// Signed angle from the follower->obstacle direction to the follower->leader
  /// direction, in (-pi, pi]. The obstacle lies at world angle theta - angle.
  double angle = 0.0;
};

/// Equidistance tolerance for ranking candidate critical points.
inline constexpr double kTieTolerance = 1e-9;

/// Signed angle from a to b in (-pi, pi].
double signed_angle(const Vec2& from, const Vec2& to);

std::optional<CriticalObstacle> select_critical(std::span<const Vec2> cloud, const Vec2& follower_pos,
                                                const Vec2& follower_vel, const Vec2& leader_pos,
                                                const FollowerConfig& cfg);

/// Reactive component K1 (d_cr - d) [cos(phi), -sin(phi), 0] on its own.
Wrench reactive_term(const FollowerConfig& cfg, double distance, double angle);

/// Assist the leader with K2 * u_hat and add the reactive term when a critical
/// obstacle is present. Throws std::invalid_argument if the obstacle lies
/// beyond the critical radius.
Wrench reactive_input(const Wrench& u_hat, const std::optional<CriticalObstacle>& crit,
                      const FollowerConfig& cfg);

/// Thrown when the inference linear system is singular.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Recovers the leader's wrench from two leader-referenced state estimates
/// one Euler step apart, given the follower's own input held over that step.
Wrench infer_leader_input(const RodParams& params, const JointState& before, const JointState& after,
                          const Wrench& follower_input, double delta);

}  // namespace rodsim
