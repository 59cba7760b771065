#include "rodsim/follower_policy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rodsim {

Eigen::Vector3d FollowerConfig::reactive_gains() const {
  const double scale = (1.0 - assist_gain) / critical_radius;
  return {bounds.axial * scale, bounds.perpendicular * scale, 0.0};
}

void FollowerConfig::validate() const {
  if (!(critical_radius > 0.0)) {
    throw std::invalid_argument("critical radius must be positive");
  }
  if (!(assist_gain >= 0.0 && assist_gain < 1.0)) {
    throw std::invalid_argument("assist gain must lie in [0, 1)");
  }
  bounds.validate();
}

double signed_angle(const Vec2& from, const Vec2& to) {
  const double a = std::atan2(from.x() * to.y() - from.y() * to.x(), from.dot(to));
  return a == -std::numbers::pi ? std::numbers::pi : a;
}

std::optional<CriticalObstacle> select_critical(std::span<const Vec2> cloud, const Vec2& follower_pos,
                                                const Vec2& follower_vel, const Vec2& leader_pos,
                                                const FollowerConfig& cfg) {
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& c : cloud) {
    const double d = (c - follower_pos).norm();
    if (d <= cfg.critical_radius && d < best_dist) {
      best_dist = d;
    }
  }
  if (!std::isfinite(best_dist)) {
    return std::nullopt;
  }

  const double speed = follower_vel.norm();
  const Vec2* chosen = nullptr;
  double chosen_cos = -std::numeric_limits<double>::infinity();
  for (const auto& c : cloud) {
    const double d = (c - follower_pos).norm();
    if (d > cfg.critical_radius || d - best_dist > kTieTolerance) {
      continue;
    }
    // Alignment of the follower velocity with the direction to the candidate;
    // undefined at rest or at zero distance, where lexicographic order decides.
    const double cosine = (speed > 0.0 && d > 0.0) ? follower_vel.dot(c - follower_pos) / (speed * d) : 0.0;
    const bool better =
        chosen == nullptr || cosine > chosen_cos ||
        (cosine == chosen_cos && (c.x() < chosen->x() || (c.x() == chosen->x() && c.y() < chosen->y())));
    if (better) {
      chosen = &c;
      chosen_cos = cosine;
    }
  }

  CriticalObstacle out;
  out.point = *chosen;
  out.distance = (*chosen - follower_pos).norm();
  out.angle = out.distance > 0.0 ? signed_angle(*chosen - follower_pos, leader_pos - follower_pos) : 0.0;
  return out;
}

Wrench reactive_term(const FollowerConfig& cfg, double distance, double angle) {
  const Eigen::Vector3d k1 = cfg.reactive_gains();
  const double gap = cfg.critical_radius - distance;
  return {k1[0] * gap * std::cos(angle), -k1[1] * gap * std::sin(angle), 0.0};
}

Wrench reactive_input(const Wrench& u_hat, const std::optional<CriticalObstacle>& crit,
                      const FollowerConfig& cfg) {
  Wrench out = cfg.assist_gain * u_hat;
  if (crit) {
    if (crit->distance > cfg.critical_radius || crit->distance < 0.0) {
      throw std::invalid_argument("critical obstacle lies outside the critical radius");
    }
    out = out + reactive_term(cfg, crit->distance, crit->angle);
  }
  return cfg.bounds.clamp(out);
}

Wrench infer_leader_input(const RodParams& params, const JointState& before, const JointState& after,
                          const Wrench& follower_input, double delta) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("inference window must be positive");
  }
  const AccelerationMap map = acceleration_map(params, before.theta(), before.omega());
  const Eigen::Vector3d rhs =
      measured_acceleration(before, after, delta) - map.drift - map.follower * follower_input.vec();
  Eigen::FullPivLU<Eigen::Matrix3d> lu(map.leader);
  if (!lu.isInvertible()) {
    throw EstimationError("leader input is not identifiable from the state increment");
  }
  return Wrench::from(lu.solve(rhs));
}

}  // namespace rodsim
