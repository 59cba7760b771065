#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace rodsim {

using Vec2 = Eigen::Vector2d;
using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Physical parameters of the two point robots and the rod joining them.
///
/// The "leader" arm is the distance from the leader robot to the rod's
/// reference point; the "follower" arm is the remaining length. After a role
/// switch the same physical rod is described by `swapped()`.
struct RodParams {
  double leader_mass = 0.04;
  double follower_mass = 0.04;
  double rod_mass = 0.01;
  double leader_arm = 0.8;
  double follower_arm = 0.8;

  double length() const { return leader_arm + follower_arm; }
  double total_mass() const { return rod_mass + leader_mass + follower_mass; }
  double rod_inertia() const { return rod_mass * length() * length() / 12.0; }
  double total_inertia() const;

  /// Throws std::invalid_argument unless all masses and arms are positive.
  void validate() const;

  /// Same rod, described from the opposite end.
  RodParams swapped() const;

  bool operator==(const RodParams&) const = default;
};

/// An agent's input expressed in the rod frame: force along the rod (pointing
/// from follower to leader), force perpendicular to it, and torque.
struct Wrench {
  double axial = 0.0;
  double perpendicular = 0.0;
  double torque = 0.0;

  Eigen::Vector3d vec() const { return {axial, perpendicular, torque}; }
  static Wrench from(const Eigen::Vector3d& w) { return {w[0], w[1], w[2]}; }

  bool operator==(const Wrench&) const = default;
};

Wrench operator+(const Wrench& a, const Wrench& b);
Wrench operator*(double k, const Wrench& w);

/// The same physical wrench expressed in the frame of the opposite rod end.
inline Wrench swap_wrench(const Wrench& w) { return {-w.axial, -w.perpendicular, w.torque}; }

/// Symmetric box on each wrench component.
struct InputBounds {
  double axial = 5.0;
  double perpendicular = 5.0;
  double torque = 0.5;

  bool contains(const Wrench& w, double tol = 0.0) const;
  Wrench clamp(const Wrench& w) const;
  Eigen::Vector3d upper() const { return {axial, perpendicular, torque}; }
  void validate() const;

  bool operator==(const InputBounds&) const = default;
};

/// Canonical joint state [X, Xdot, Y, Ydot, theta, thetadot] referenced at the
/// leading end of the rod. theta points from the follower to the leader.
struct JointState {
  Vector6d values = Vector6d::Zero();

  static JointState make(double x, double vx, double y, double vy, double theta, double omega);

  double x() const { return values[0]; }
  double vx() const { return values[1]; }
  double y() const { return values[2]; }
  double vy() const { return values[3]; }
  double theta() const { return values[4]; }
  double omega() const { return values[5]; }

  Vec2 position() const { return {values[0], values[2]}; }
  Vec2 velocity() const { return {values[1], values[3]}; }

  bool finite() const { return values.allFinite(); }
  bool operator==(const JointState& o) const { return values == o.values; }
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Rigid-body planar dynamics of the rod system, generic over the scalar so the
/// MPC can differentiate through it.
template <typename T>
Eigen::Matrix<T, 6, 1> state_derivative(const RodParams& p, const Eigen::Matrix<T, 6, 1>& s,
                                        const Eigen::Matrix<T, 3, 1>& u,
                                        const Eigen::Matrix<T, 3, 1>& v) {
  using std::cos;
  using std::sin;
  const double m = p.total_mass();
  const double inertia = p.total_inertia();
  const double ll = p.leader_arm;
  const double lf = p.follower_arm;

  const T c = cos(s[4]);
  const T sn = sin(s[4]);
  const T omega_sq = s[5] * s[5];
  const T angular = (-v[1] * lf + u[1] * ll + u[2] + v[2]) / inertia;
  const T fa = u[0] + v[0];
  const T fp = u[1] + v[1];
  const T q1 = -(ll * sn * angular + ll * c * omega_sq) + (c * fa - sn * fp) / m;
  const T q2 = (ll * c * angular - ll * sn * omega_sq) + (sn * fa + c * fp) / m;

  Eigen::Matrix<T, 6, 1> out;
  out << s[1], q1, s[3], q2, s[5], angular;
  return out;
}

/// Time derivative of the joint state under leader input u and follower input v.
/// Throws std::domain_error on non-finite arguments.
Vector6d eval_dynamics(const RodParams& params, const JointState& state, const Wrench& u,
                       const Wrench& v);

/// One forward-Euler step of length h.
JointState euler_substep(const RodParams& params, const JointState& state, const Wrench& u,
                         const Wrench& v, double h);

/// Linear part of the accelerations (Xddot, Yddot, thetaddot) in each agent's
/// wrench, plus the input-free drift, at orientation theta and rate omega.
struct AccelerationMap {
  Eigen::Matrix3d leader;
  Eigen::Matrix3d follower;
  Eigen::Vector3d drift;
};

AccelerationMap acceleration_map(const RodParams& params, double theta, double omega);

/// Measured acceleration (dXdot, dYdot, dthetadot) / h between two states.
Eigen::Vector3d measured_acceleration(const JointState& before, const JointState& after, double h);

/// Follower robot position implied by the joint state.
Vec2 leader_view_of_follower(const RodParams& params, const JointState& state);

/// Follower robot velocity implied by the joint state.
Vec2 follower_velocity(const RodParams& params, const JointState& state);

/// What the follower measures about itself.
struct FollowerMeasurement {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

/// Reconstructs the leader-referenced joint state from the follower's own
/// position and velocity plus the rod angle and rate.
JointState follower_view(const RodParams& params, const FollowerMeasurement& measured, double theta,
                         double omega);

/// The same configuration referenced at the opposite rod end, theta + pi wrapped.
JointState swap_view(const RodParams& params, const JointState& state);

}  // namespace rodsim
