#include "rodsim/obstacle_inference.hpp"

#include <cmath>
#include <stdexcept>

namespace rodsim {
namespace {

// Recovered distances may undershoot zero by rounding; anything below this is
// not a reactive input the follower could have produced.
constexpr double kDistanceSlack = 1e-9;

}  // namespace

Wrench infer_follower_input(const RodParams& params, const JointState& before, const JointState& after,
                            const Wrench& leader_input, double window) {
  if (!(window > 0.0)) {
    throw std::invalid_argument("inference window must be positive");
  }
  const AccelerationMap map = acceleration_map(params, before.theta(), before.omega());
  const Eigen::Vector3d rhs =
      measured_acceleration(before, after, window) - map.drift - map.leader * leader_input.vec();
  Eigen::FullPivLU<Eigen::Matrix3d> lu(map.follower);
  if (!lu.isInvertible()) {
    throw EstimationError("follower input is not identifiable from the state increment");
  }
  return Wrench::from(lu.solve(rhs));
}

RecoveryResult recover_obstacle(const FollowerConfig& cfg, const Eigen::Vector2d& residual,
                                const JointState& leader_state, const RodParams& params, double tolerance) {
  RecoveryResult out;
  if (residual.norm() <= tolerance) {
    return out;
  }
  const Eigen::Vector3d k1 = cfg.reactive_gains();
  // Normalized residual equals (d_cr - d) * (cos(phi), -sin(phi)).
  const double along = residual[0] / k1[0];
  const double across = -residual[1] / k1[1];
  const double gap = std::hypot(along, across);
  double distance = cfg.critical_radius - gap;
  if (distance < -kDistanceSlack) {
    out.status = RecoveryStatus::InconsistentResidual;
    return out;
  }
  distance = std::max(distance, 0.0);

  InferredObstacle obstacle;
  obstacle.angle = std::atan2(across, along);
  if (obstacle.angle == -std::numbers::pi) {
    obstacle.angle = std::numbers::pi;
  }
  obstacle.distance = distance;
  const double heading = leader_state.theta() - obstacle.angle;
  obstacle.point = leader_view_of_follower(params, leader_state) +
                   distance * Vec2(std::cos(heading), std::sin(heading));
  out.status = RecoveryStatus::Recovered;
  out.obstacle = obstacle;
  return out;
}

InferenceResult infer_obstacle(const RodParams& params, const FollowerConfig& cfg, const JointState& at_delay,
                               const JointState& at_end, const Wrench& leader_input, double window,
                               double tolerance) {
  InferenceResult out;
  out.v_hat = infer_follower_input(params, at_delay, at_end, leader_input, window);
  const Wrench assist = cfg.assist_gain * leader_input;
  out.residual = {out.v_hat.axial - assist.axial, out.v_hat.perpendicular - assist.perpendicular};
  out.torque_consistent = std::abs(out.v_hat.torque - assist.torque) <= tolerance;
  const RecoveryResult rec = recover_obstacle(cfg, out.residual, at_delay, params, tolerance);
  out.status = rec.status;
  out.obstacle = rec.obstacle;
  return out;
}

PointCloud update_known_obstacles(PointCloud cloud, std::span<const Vec2> newly_sensed,
                                  const std::optional<Vec2>& inferred, int step, PointSource sensed_as) {
  for (const auto& p : newly_sensed) {
    cloud.insert({p, sensed_as, step});
  }
  if (inferred) {
    cloud.insert({*inferred, PointSource::Inferred, step});
  }
  return cloud;
}

}  // namespace rodsim
