#include "rodsim/leader_mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/AutoDiff>

namespace rodsim {
namespace {

using Derivatives = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3 * kMaxHorizon, 1>;
using Dual = Eigen::AutoDiffScalar<Derivatives>;

double value_of(double v) { return v; }
double value_of(const Dual& v) { return v.value(); }

// Constant carrying zero derivatives sized like `like`; mixing empty and
// sized derivative vectors loses terms in the product rule.
double constant(double v, double) { return v; }
Dual constant(double v, const Dual& like) { return Dual(v, Derivatives::Zero(like.derivatives().size())); }

// Everything the rollout cost needs, with the cloud already restricted to
// points that can come within the safe distance of the rod.
struct CostContext {
  const RodParams& params;
  const MpcConfig& cfg;
  const JointState& initial;
  std::span<const Vec2> cloud;
  TrackingReference ref;
};

template <typename T>
T hinge(const MpcConfig& cfg, const T& d) {
  if (value_of(d) >= cfg.safe_distance) {
    return T(0.0);
  }
  const T gap = cfg.safe_distance - d;
  return cfg.obstacle_weight * gap * gap;
}

template <typename T>
T point_penalty(const CostContext& ctx, const T& px, const T& py) {
  const MpcConfig& cfg = ctx.cfg;
  T total(0.0);
  if (!ctx.cloud.empty()) {
    const double vx = value_of(px);
    const double vy = value_of(py);
    const Vec2* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : ctx.cloud) {
      const double d2 = (c.x() - vx) * (c.x() - vx) + (c.y() - vy) * (c.y() - vy);
      if (d2 < best) {
        best = d2;
        nearest = &c;
      }
    }
    if (best < cfg.safe_distance * cfg.safe_distance) {
      if (best == 0.0) {
        total += T(cfg.obstacle_weight * cfg.safe_distance * cfg.safe_distance);
      } else {
        using std::sqrt;
        const T dx = px - nearest->x();
        const T dy = py - nearest->y();
        total += hinge(cfg, T(sqrt(dx * dx + dy * dy)));
      }
    }
  }
  if (cfg.workspace_bounds) {
    const Bounds& b = *cfg.workspace_bounds;
    total += hinge(cfg, T(px - b.min_x)) + hinge(cfg, T(b.max_x - px)) + hinge(cfg, T(py - b.min_y)) +
             hinge(cfg, T(b.max_y - py));
  }
  return total;
}

template <typename T>
T stage_cost(const CostContext& ctx, const Eigen::Matrix<T, 6, 1>& s) {
  using std::cos;
  using std::sin;
  const MpcConfig& cfg = ctx.cfg;
  const double len = ctx.params.length();
  const T c = cos(s[4]);
  const T sn = sin(s[4]);
  const T fx = s[0] - len * c;
  const T fy = s[2] - len * sn;

  Eigen::Matrix<T, 6, 1> tracked = s;
  if (ctx.ref == TrackingReference::OppositeEnd) {
    const double wrapped = wrap_angle(value_of(s[4]) + std::numbers::pi);
    const double shift = wrapped - value_of(s[4]);
    tracked << fx, s[1] + len * sn * s[5], fy, s[3] - len * c * s[5], s[4] + shift, s[5];
  }

  T cost(0.0);
  for (int i = 0; i < 6; ++i) {
    const T e = tracked[i] - cfg.target.values[i];
    cost += cfg.state_weight[i] * e * e;
  }
  for (const double alpha : cfg.alpha_samples) {
    cost += point_penalty<T>(ctx, T(alpha * s[0] + (1.0 - alpha) * fx), T(alpha * s[2] + (1.0 - alpha) * fy));
  }
  return cost;
}

template <typename T>
T rollout_cost(const CostContext& ctx, const Eigen::Matrix<T, Eigen::Dynamic, 1>& z) {
  const MpcConfig& cfg = ctx.cfg;
  Eigen::Matrix<T, 6, 1> s;
  for (int i = 0; i < 6; ++i) {
    s[i] = constant(ctx.initial.values[i], z[0]);
  }
  T cost(0.0);
  for (int k = 0; k < cfg.horizon; ++k) {
    const Eigen::Matrix<T, 3, 1> u = z.template segment<3>(3 * k);
    const Eigen::Matrix<T, 3, 1> v = cfg.assist_gain * u;
    s = s + cfg.period * state_derivative<T>(ctx.params, s, u, v);
    for (int i = 0; i < 3; ++i) {
      cost += cfg.input_weight[i] * u[i] * u[i];
    }
    cost += stage_cost<T>(ctx, s);
  }
  return cost;
}

Eigen::VectorXd stack(std::span<const Wrench> inputs) {
  Eigen::VectorXd z(3 * inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    z.segment<3>(3 * k) = inputs[k].vec();
  }
  return z;
}

std::vector<Wrench> unstack(const Eigen::VectorXd& z) {
  std::vector<Wrench> out(z.size() / 3);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = Wrench::from(z.segment<3>(3 * k));
  }
  return out;
}

double cost_at(const CostContext& ctx, const Eigen::VectorXd& z) { return rollout_cost<double>(ctx, z); }

Eigen::VectorXd gradient_at(const CostContext& ctx, const Eigen::VectorXd& z, GradientMode mode) {
  const int n = static_cast<int>(z.size());
  if (mode == GradientMode::FiniteDifference) {
    Eigen::VectorXd g(n);
    Eigen::VectorXd probe = z;
    const double h = ctx.cfg.gradient_step;
    for (int i = 0; i < n; ++i) {
      probe[i] = z[i] + h;
      const double up = cost_at(ctx, probe);
      probe[i] = z[i] - h;
      const double down = cost_at(ctx, probe);
      probe[i] = z[i];
      g[i] = (up - down) / (2.0 * h);
    }
    return g;
  }
  Eigen::Matrix<Dual, Eigen::Dynamic, 1> zd(n);
  for (int i = 0; i < n; ++i) {
    zd[i] = Dual(z[i], n, i);
  }
  const Dual c = rollout_cost<Dual>(ctx, zd);
  if (c.derivatives().size() == 0) {
    return Eigen::VectorXd::Zero(n);
  }
  return c.derivatives();
}

// Cloud points farther than this from the current rod segment cannot get
// within the safe distance of any sampled rod point over the horizon.
double prune_radius(const RodParams& params, const MpcConfig& cfg, const JointState& s) {
  const double horizon = cfg.horizon * cfg.period;
  const double k = 1.0 + std::abs(cfg.assist_gain);
  const double inertia = params.total_inertia();
  const double angular_max = (k * cfg.bounds.perpendicular * std::max(params.leader_arm, params.follower_arm) * 2.0 +
                              k * cfg.bounds.torque) /
                             inertia;
  const double omega_max = std::abs(s.omega()) + angular_max * horizon;
  const double linear_max = k * std::hypot(cfg.bounds.axial, cfg.bounds.perpendicular) / params.total_mass();
  const double ref_accel = linear_max + params.leader_arm * (angular_max + omega_max * omega_max);
  const double ref_shift = horizon * s.velocity().norm() + horizon * horizon * ref_accel;
  const double turn = horizon * omega_max;
  return ref_shift + params.length() * turn + cfg.safe_distance + 1e-3;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

std::vector<Vec2> nearby_points(const RodParams& params, const MpcConfig& cfg, const JointState& s,
                                std::span<const Vec2> cloud) {
  const double radius = prune_radius(params, cfg, s);
  const Vec2 lead = s.position();
  const Vec2 foll = leader_view_of_follower(params, s);
  std::vector<Vec2> out;
  for (const auto& c : cloud) {
    if (point_segment_distance(c, lead, foll) <= radius) {
      out.push_back(c);
    }
  }
  return out;
}

void check_inputs(const MpcConfig& cfg, std::span<const Wrench> inputs) {
  if (static_cast<int>(inputs.size()) != cfg.horizon) {
    throw std::invalid_argument("input sequence length must equal the horizon");
  }
}

Eigen::VectorXd project(const MpcConfig& cfg, Eigen::VectorXd z) {
  const Eigen::Vector3d hi = cfg.bounds.upper();
  for (int i = 0; i < z.size(); ++i) {
    z[i] = std::clamp(z[i], -hi[i % 3], hi[i % 3]);
  }
  return z;
}

}  // namespace

void MpcConfig::validate() const {
  if (horizon < 1 || horizon > kMaxHorizon) {
    throw std::invalid_argument("MPC horizon must lie in [1, " + std::to_string(kMaxHorizon) + "]");
  }
  if (!(period > 0.0)) {
    throw std::invalid_argument("MPC period must be positive");
  }
  for (const double w : state_weight) {
    if (!(w >= 0.0)) throw std::invalid_argument("state weights must be non-negative");
  }
  for (const double w : input_weight) {
    if (!(w >= 0.0)) throw std::invalid_argument("input weights must be non-negative");
  }
  if (alpha_samples.empty()) {
    throw std::invalid_argument("alpha samples must not be empty");
  }
  bool has_zero = false;
  bool has_one = false;
  for (const double a : alpha_samples) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha samples must lie in [0, 1]");
    has_zero = has_zero || a == 0.0;
    has_one = has_one || a == 1.0;
  }
  if (!has_zero || !has_one) {
    throw std::invalid_argument("alpha samples must include both rod ends (0 and 1)");
  }
  if (!(safe_distance > 0.0) || !(obstacle_weight > 0.0)) {
    throw std::invalid_argument("obstacle penalty distance and weight must be positive");
  }
  bounds.validate();
  if (max_iterations < 1 || !(gradient_step > 0.0) || !(tolerance > 0.0)) {
    throw std::invalid_argument("invalid MPC solver settings");
  }
  if (!target.finite()) {
    throw std::invalid_argument("MPC target must be finite");
  }
}

std::vector<JointState> predict(const RodParams& params, const MpcConfig& cfg, const JointState& initial,
                                std::span<const Wrench> inputs) {
  check_inputs(cfg, inputs);
  std::vector<JointState> states{initial};
  states.reserve(inputs.size() + 1);
  for (const auto& u : inputs) {
    states.push_back(euler_substep(params, states.back(), u, cfg.assist_gain * u, cfg.period));
  }
  return states;
}

double obstacle_penalty(const MpcConfig& cfg, const Vec2& leader_pos, const Vec2& follower_pos,
                        std::span<const Vec2> cloud) {
  MpcConfig local = cfg;
  local.workspace_bounds.reset();
  const RodParams unused;
  const JointState origin;
  const CostContext ctx{unused, local, origin, cloud, TrackingReference::Self};
  double total = 0.0;
  for (const double alpha : cfg.alpha_samples) {
    const Vec2 p = alpha * leader_pos + (1.0 - alpha) * follower_pos;
    total += point_penalty<double>(ctx, p.x(), p.y());
  }
  return total;
}

double mpc_cost(const RodParams& params, const MpcConfig& cfg, const JointState& initial,
                std::span<const Vec2> cloud, std::span<const Wrench> inputs, TrackingReference ref) {
  check_inputs(cfg, inputs);
  const CostContext ctx{params, cfg, initial, cloud, ref};
  return cost_at(ctx, stack(inputs));
}

Eigen::VectorXd mpc_gradient(const RodParams& params, const MpcConfig& cfg, const JointState& initial,
                             std::span<const Vec2> cloud, std::span<const Wrench> inputs, TrackingReference ref,
                             GradientMode mode) {
  check_inputs(cfg, inputs);
  const CostContext ctx{params, cfg, initial, cloud, ref};
  return gradient_at(ctx, stack(inputs), mode);
}

MpcSolution solve(const RodParams& params, const MpcConfig& cfg, const JointState& initial,
                  std::span<const Vec2> cloud, const std::optional<std::vector<Wrench>>& warm_start,
                  TrackingReference ref) {
  if (!initial.finite()) {
    throw std::invalid_argument("MPC initial state must be finite");
  }
  const std::vector<Vec2> near = nearby_points(params, cfg, initial, cloud);
  const CostContext ctx{params, cfg, initial, near, ref};
  const int n = 3 * cfg.horizon;

  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  double f = cost_at(ctx, z);
  if (warm_start && static_cast<int>(warm_start->size()) == cfg.horizon) {
    const Eigen::VectorXd candidate = project(cfg, stack(*warm_start));
    const double fc = cost_at(ctx, candidate);
    if (fc < f) {
      z = candidate;
      f = fc;
    }
  }
  if (!std::isfinite(f)) {
    throw SolverError("MPC cost is not finite at the initial guess");
  }

  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-10;
  constexpr double kMaxStep = 1e10;
  constexpr int kMaxBacktracks = 40;

  MpcSolution sol;
  sol.cost_trace.push_back(f);
  Eigen::VectorXd g = gradient_at(ctx, z, cfg.gradient);
  double step = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
  int iter = 0;
  for (; iter < cfg.max_iterations; ++iter) {
    Eigen::VectorXd dir = project(cfg, z - step * g) - z;
    if (dir.lpNorm<Eigen::Infinity>() < 1e-12) {
      // Try a unit step before declaring stationarity; BB steps can be tiny.
      dir = project(cfg, z - g) - z;
      if (dir.lpNorm<Eigen::Infinity>() < 1e-12) {
        sol.converged = true;
        break;
      }
    }
    const double slope = g.dot(dir);
    double lambda = 1.0;
    Eigen::VectorXd z_new;
    double f_new = f;
    bool accepted = false;
    for (int b = 0; b < kMaxBacktracks; ++b) {
      z_new = project(cfg, z + lambda * dir);
      f_new = cost_at(ctx, z_new);
      if (!std::isfinite(f_new)) {
        throw SolverError("MPC cost diverged during line search");
      }
      if (f_new <= f + kArmijo * lambda * slope) {
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted || f_new > f) {
      sol.converged = true;
      break;
    }
    const Eigen::VectorXd g_new = gradient_at(ctx, z_new, cfg.gradient);
    const Eigen::VectorXd s = z_new - z;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, kMinStep, kMaxStep) : kMaxStep;
    const double decrease = f - f_new;
    z = z_new;
    g = g_new;
    f = f_new;
    sol.cost_trace.push_back(f);
    if (decrease <= cfg.tolerance) {
      sol.converged = true;
      ++iter;
      break;
    }
  }

  sol.inputs = unstack(z);
  sol.predicted_states = predict(params, cfg, initial, sol.inputs);
  sol.cost = f;
  sol.iterations = iter;
  return sol;
}

Wrench first_input(const MpcSolution& sol) {
  if (sol.inputs.empty()) {
    throw std::invalid_argument("MPC solution has no inputs");
  }
  return sol.inputs.front();
}

std::vector<Wrench> shifted_warm_start(const MpcSolution& sol) {
  if (sol.inputs.empty()) {
    return {};
  }
  std::vector<Wrench> out(sol.inputs.begin() + 1, sol.inputs.end());
  out.push_back(sol.inputs.back());
  return out;
}

}  // namespace rodsim
