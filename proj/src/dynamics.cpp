#include "rodsim/dynamics.hpp"

#include <algorithm>
#include <stdexcept>

namespace rodsim {

double RodParams::total_inertia() const {
  const double offset = (leader_arm - follower_arm) / 2.0;
  return rod_inertia() + rod_mass * offset * offset + leader_mass * leader_arm * leader_arm +
         follower_mass * follower_arm * follower_arm;
}

void RodParams::validate() const {
  if (!(leader_mass > 0.0) || !(follower_mass > 0.0) || !(rod_mass > 0.0)) {
    throw std::invalid_argument("rod masses must be strictly positive");
  }
  if (!(leader_arm > 0.0) || !(follower_arm > 0.0)) {
    throw std::invalid_argument("rod arm lengths must be strictly positive");
  }
}

RodParams RodParams::swapped() const {
  return {follower_mass, leader_mass, rod_mass, follower_arm, leader_arm};
}

Wrench operator+(const Wrench& a, const Wrench& b) {
  return {a.axial + b.axial, a.perpendicular + b.perpendicular, a.torque + b.torque};
}

Wrench operator*(double k, const Wrench& w) {
  return {k * w.axial, k * w.perpendicular, k * w.torque};
}

bool InputBounds::contains(const Wrench& w, double tol) const {
  return std::abs(w.axial) <= axial + tol && std::abs(w.perpendicular) <= perpendicular + tol &&
         std::abs(w.torque) <= torque + tol;
}

Wrench InputBounds::clamp(const Wrench& w) const {
  return {std::clamp(w.axial, -axial, axial), std::clamp(w.perpendicular, -perpendicular, perpendicular),
          std::clamp(w.torque, -torque, torque)};
}

void InputBounds::validate() const {
  if (!(axial > 0.0) || !(perpendicular > 0.0) || !(torque > 0.0)) {
    throw std::invalid_argument("input bounds must be strictly positive");
  }
}

JointState JointState::make(double x, double vx, double y, double vy, double theta, double omega) {
  JointState s;
  s.values << x, vx, y, vy, theta, omega;
  return s;
}

double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, kTwoPi);
  if (r <= -std::numbers::pi) {
    r += kTwoPi;
  } else if (r > std::numbers::pi) {
    r -= kTwoPi;
  }
  return r;
}

Vector6d eval_dynamics(const RodParams& params, const JointState& state, const Wrench& u,
                       const Wrench& v) {
  if (!state.finite() || !u.vec().allFinite() || !v.vec().allFinite()) {
    throw std::domain_error("eval_dynamics: non-finite state or input");
  }
  return state_derivative<double>(params, state.values, u.vec(), v.vec());
}

JointState euler_substep(const RodParams& params, const JointState& state, const Wrench& u,
                         const Wrench& v, double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("euler_substep: step must be positive");
  }
  JointState next;
  next.values = state.values + h * eval_dynamics(params, state, u, v);
  return next;
}

AccelerationMap acceleration_map(const RodParams& params, double theta, double omega) {
  const double m = params.total_mass();
  const double inertia = params.total_inertia();
  const double ll = params.leader_arm;
  const double lf = params.follower_arm;
  const double c = std::cos(theta);
  const double s = std::sin(theta);

  // Rows: Xddot, Yddot, thetaddot. Columns: axial, perpendicular, torque.
  AccelerationMap map;
  map.leader << c / m, -ll * ll * s / inertia - s / m, -ll * s / inertia,  //
      s / m, ll * ll * c / inertia + c / m, ll * c / inertia,              //
      0.0, ll / inertia, 1.0 / inertia;
  map.follower << c / m, ll * lf * s / inertia - s / m, -ll * s / inertia,  //
      s / m, -ll * lf * c / inertia + c / m, ll * c / inertia,              //
      0.0, -lf / inertia, 1.0 / inertia;
  map.drift << -ll * c * omega * omega, -ll * s * omega * omega, 0.0;
  return map;
}

Eigen::Vector3d measured_acceleration(const JointState& before, const JointState& after, double h) {
  return Eigen::Vector3d(after.vx() - before.vx(), after.vy() - before.vy(),
                         after.omega() - before.omega()) /
         h;
}

Vec2 leader_view_of_follower(const RodParams& params, const JointState& state) {
  const double len = params.length();
  return {state.x() - len * std::cos(state.theta()), state.y() - len * std::sin(state.theta())};
}

Vec2 follower_velocity(const RodParams& params, const JointState& state) {
  const double len = params.length();
  const double th = state.theta();
  return {state.vx() + len * std::sin(th) * state.omega(),
          state.vy() - len * std::cos(th) * state.omega()};
}

JointState follower_view(const RodParams& params, const FollowerMeasurement& measured, double theta,
                         double omega) {
  const double len = params.length();
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return JointState::make(measured.position.x() + len * c, measured.velocity.x() - len * s * omega,
                          measured.position.y() + len * s, measured.velocity.y() + len * c * omega,
                          theta, omega);
}

JointState swap_view(const RodParams& params, const JointState& state) {
  const Vec2 pos = leader_view_of_follower(params, state);
  const Vec2 vel = follower_velocity(params, state);
  return JointState::make(pos.x(), vel.x(), pos.y(), vel.y(),
                          wrap_angle(state.theta() + std::numbers::pi), state.omega());
}

}  // namespace rodsim
