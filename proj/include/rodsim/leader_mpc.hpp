#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rodsim/dynamics.hpp"
#include "rodsim/environment.hpp"

namespace rodsim {

/// Longest supported horizon; bounds the autodiff derivative storage.
inline constexpr int kMaxHorizon = 20;

enum class GradientMode { Automatic, FiniteDifference };

/// Which rod end the tracking term compares against the target. After a role
/// switch the new leader still drives the original leader's end to the target.
enum class TrackingReference { Self, OppositeEnd };

struct MpcConfig {
  int horizon = 3;
  double period = 0.03;
  std::array<double, 6> state_weight{120.0, 4.0, 120.0, 4.0, 0.0, 0.01};
  std::array<double, 3> input_weight{0.05, 0.05, 0.01};
  JointState target = JointState::make(3.0, 0.0, 3.95, 0.0, 0.0, 0.0);
  std::vector<double> alpha_samples{0.0, 0.25, 0.5, 0.75, 1.0};
  double safe_distance = 0.5;
  double obstacle_weight = 500.0;
  InputBounds bounds;
  /// Predicted follower input is assist_gain * u.
  double assist_gain = 0.5;
  /// Adds hinge penalties keeping the rod inside these bounds.
  std::optional<Bounds> workspace_bounds;
  int max_iterations = 200;
  /// Central-difference step when gradient == FiniteDifference.
  double gradient_step = 1e-6;
  /// Stop once an accepted step decreases the cost by no more than this.
  double tolerance = 1e-6;
  GradientMode gradient = GradientMode::FiniteDifference;

  void validate() const;
};

struct MpcSolution {
  std::vector<Wrench> inputs;
  std::vector<JointState> predicted_states;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_trace;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rolls the Euler model forward one period per stage with follower input K2 u.
std::vector<JointState> predict(const RodParams& params, const MpcConfig& cfg, const JointState& initial,
                                std::span<const Wrench> inputs);

/// Hinge-squared penalty w * max(0, d_safe - d)^2 summed over the sampled rod
/// points, d being the distance to the nearest cloud point.
double obstacle_penalty(const MpcConfig& cfg, const Vec2& leader_pos, const Vec2& follower_pos,
                        std::span<const Vec2> cloud);

/// Total horizon cost of an input sequence over the full cloud.
double mpc_cost(const RodParams& params, const MpcConfig& cfg, const JointState& initial,
                std::span<const Vec2> cloud, std::span<const Wrench> inputs,
                TrackingReference ref = TrackingReference::Self);

/// Gradient of mpc_cost with respect to the stacked inputs (axial,
/// perpendicular, torque per stage).
Eigen::VectorXd mpc_gradient(const RodParams& params, const MpcConfig& cfg, const JointState& initial,
                             std::span<const Vec2> cloud, std::span<const Wrench> inputs,
                             TrackingReference ref = TrackingReference::Self,
                             GradientMode mode = GradientMode::Automatic);

/// Projected-gradient solve of the penalized horizon problem. The result is
/// never worse than the better of the warm start and the zero sequence.
/// Throws SolverError when the cost becomes non-finite.
MpcSolution solve(const RodParams& params, const MpcConfig& cfg, const JointState& initial,
                  std::span<const Vec2> cloud, const std::optional<std::vector<Wrench>>& warm_start = std::nullopt,
                  TrackingReference ref = TrackingReference::Self);

Wrench first_input(const MpcSolution& sol);

/// Previous solution advanced by one stage, last stage repeated.
std::vector<Wrench> shifted_warm_start(const MpcSolution& sol);

}  // namespace rodsim
