#include "rodsim/scenario.hpp"

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rodsim {
namespace {

using nlohmann::json;

Obstacle box(double x0, double y0, double x1, double y1) {
  return Obstacle({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void require_object(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) {
    throw ScenarioError(path, "expected an object");
  }
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ScenarioError(join(path, key), "unknown field");
    }
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) {
    throw ScenarioError(path, "expected a number");
  }
  return j.get<double>();
}

void read(const json& j, const std::string& path, const char* key, double& out) {
  if (j.contains(key)) out = as_number(j.at(key), join(path, key));
}

void read(const json& j, const std::string& path, const char* key, int& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ScenarioError(join(path, key), "expected an integer");
  out = v.get<int>();
}

void read(const json& j, const std::string& path, const char* key, std::uint64_t& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ScenarioError(join(path, key), "expected a non-negative integer");
  }
  out = v.get<std::uint64_t>();
}

std::vector<double> as_numbers(const json& j, const std::string& path, std::size_t expected = 0) {
  if (!j.is_array()) throw ScenarioError(path, "expected an array");
  if (expected != 0 && j.size() != expected) {
    throw ScenarioError(path, "expected " + std::to_string(expected) + " values");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], index(path, i)));
  return out;
}

template <std::size_t N>
void read(const json& j, const std::string& path, const char* key, std::array<double, N>& out) {
  if (!j.contains(key)) return;
  const auto v = as_numbers(j.at(key), join(path, key), N);
  std::copy(v.begin(), v.end(), out.begin());
}

Vec2 as_point(const json& j, const std::string& path) {
  const auto v = as_numbers(j, path, 2);
  return {v[0], v[1]};
}

JointState as_state(const json& j, const std::string& path) {
  const auto v = as_numbers(j, path, 6);
  return JointState::make(v[0], v[1], v[2], v[3], v[4], v[5]);
}

json point_json(const Vec2& p) { return json::array({p.x(), p.y()}); }

json state_json(const JointState& s) {
  json out = json::array();
  for (int i = 0; i < 6; ++i) out.push_back(s.values[i]);
  return out;
}

const char* to_string(GradientMode m) {
  return m == GradientMode::Automatic ? "automatic" : "finite-difference";
}

void parse_rod(const json& j, const std::string& path, RodParams& rod) {
  require_object(j, path, {"leader_mass", "follower_mass", "rod_mass", "leader_arm", "follower_arm"});
  read(j, path, "leader_mass", rod.leader_mass);
  read(j, path, "follower_mass", rod.follower_mass);
  read(j, path, "rod_mass", rod.rod_mass);
  read(j, path, "leader_arm", rod.leader_arm);
  read(j, path, "follower_arm", rod.follower_arm);
}

void parse_schedule(const json& j, const std::string& path, Schedule& s) {
  require_object(j, path, {"period", "delay", "duration"});
  read(j, path, "period", s.period);
  read(j, path, "delay", s.delay);
  read(j, path, "duration", s.duration);
}

void parse_bounds(const json& j, const std::string& path, InputBounds& b) {
  require_object(j, path, {"axial", "perpendicular", "torque"});
  read(j, path, "axial", b.axial);
  read(j, path, "perpendicular", b.perpendicular);
  read(j, path, "torque", b.torque);
}

void parse_mpc(const json& j, const std::string& path, MpcConfig& m, bool& bound_penalty) {
  require_object(j, path,
                 {"horizon", "state_weight", "input_weight", "target_state", "alpha_samples", "safe_distance",
                  "obstacle_weight", "workspace_penalty", "max_iterations", "tolerance", "gradient",
                  "gradient_step"});
  read(j, path, "horizon", m.horizon);
  read(j, path, "state_weight", m.state_weight);
  read(j, path, "input_weight", m.input_weight);
  if (j.contains("target_state")) m.target = as_state(j.at("target_state"), join(path, "target_state"));
  if (j.contains("alpha_samples")) m.alpha_samples = as_numbers(j.at("alpha_samples"), join(path, "alpha_samples"));
  read(j, path, "safe_distance", m.safe_distance);
  read(j, path, "obstacle_weight", m.obstacle_weight);
  if (j.contains("workspace_penalty")) {
    if (!j.at("workspace_penalty").is_boolean()) {
      throw ScenarioError(join(path, "workspace_penalty"), "expected a boolean");
    }
    bound_penalty = j.at("workspace_penalty").get<bool>();
  }
  read(j, path, "max_iterations", m.max_iterations);
  read(j, path, "tolerance", m.tolerance);
  read(j, path, "gradient_step", m.gradient_step);
  if (j.contains("gradient")) {
    const json& g = j.at("gradient");
    if (g == "automatic") {
      m.gradient = GradientMode::Automatic;
    } else if (g == "finite-difference") {
      m.gradient = GradientMode::FiniteDifference;
    } else {
      throw ScenarioError(join(path, "gradient"), "expected \"automatic\" or \"finite-difference\"");
    }
  }
}

Obstacle parse_obstacle(const json& j, const std::string& path) {
  if (!j.is_array()) throw ScenarioError(path, "expected an array of vertices");
  std::vector<Vec2> vertices;
  for (std::size_t i = 0; i < j.size(); ++i) vertices.push_back(as_point(j[i], index(path, i)));
  try {
    return Obstacle(std::move(vertices));
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(path, e.what());
  }
}

void parse_workspace(const json& j, const std::string& path, Workspace& ws) {
  require_object(j, path, {"bounds", "obstacles"});
  if (j.contains("bounds")) {
    const std::string bp = join(path, "bounds");
    const json& b = j.at("bounds");
    require_object(b, bp, {"min_x", "min_y", "max_x", "max_y"});
    read(b, bp, "min_x", ws.bounds.min_x);
    read(b, bp, "min_y", ws.bounds.min_y);
    read(b, bp, "max_x", ws.bounds.max_x);
    read(b, bp, "max_y", ws.bounds.max_y);
  }
  if (j.contains("obstacles")) {
    const std::string op = join(path, "obstacles");
    const json& obs = j.at("obstacles");
    if (!obs.is_array()) throw ScenarioError(op, "expected an array");
    ws.obstacles.clear();
    for (std::size_t i = 0; i < obs.size(); ++i) ws.obstacles.push_back(parse_obstacle(obs[i], index(op, i)));
  }
}

std::vector<RandomizationZone> parse_zones(const json& j, const std::string& path) {
  if (!j.is_array()) throw ScenarioError(path, "expected an array");
  std::vector<RandomizationZone> zones;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string zp = index(path, i);
    require_object(j[i], zp, {"obstacle", "vertex", "min", "max"});
    for (const char* key : {"obstacle", "vertex", "min", "max"}) {
      if (!j[i].contains(key)) throw ScenarioError(join(zp, key), "missing field");
    }
    RandomizationZone z;
    std::uint64_t obstacle = 0;
    std::uint64_t vertex = 0;
    read(j[i], zp, "obstacle", obstacle);
    read(j[i], zp, "vertex", vertex);
    z.obstacle = obstacle;
    z.vertex = vertex;
    z.min = as_point(j[i].at("min"), join(zp, "min"));
    z.max = as_point(j[i].at("max"), join(zp, "max"));
    zones.push_back(z);
  }
  return zones;
}

template <typename F>
void check(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(path, e.what());
  }
}

}  // namespace

void Scenario::validate() const {
  check("rod", [&] { config.rod.validate(); });
  check("schedule", [&] { config.schedule.validate(); });
  check("follower", [&] { config.follower.validate(); });
  check("mpc", [&] { config.mpc.validate(); });
  check("sensor", [&] { config.sensor.validate(); });
  check("", [&] { config.validate(); });
  check("workspace", [&] { workspace.validate(); });
  check("initial_state", [&] {
    if (!initial.finite()) throw std::invalid_argument("state must be finite");
  });
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const auto& z = zones[i];
    const std::string zp = index("randomization_zones", i);
    if (z.obstacle >= workspace.obstacles.size()) throw ScenarioError(zp + ".obstacle", "no such obstacle");
    if (z.vertex >= workspace.obstacles[z.obstacle].size()) throw ScenarioError(zp + ".vertex", "no such vertex");
    if (!(z.min.x() <= z.max.x()) || !(z.min.y() <= z.max.y())) {
      throw ScenarioError(zp, "min must not exceed max");
    }
    if (!workspace.bounds.contains(z.min) || !workspace.bounds.contains(z.max)) {
      throw ScenarioError(zp, "zone must lie inside the workspace bounds");
    }
  }
}

Scenario default_scenario() {
  Scenario s;
  s.config.mpc.workspace_bounds = s.workspace.bounds;
  s.config.mpc.obstacle_weight = 2000.0;
  s.workspace.obstacles = {
      // Left obstacle, passed by the initial follower.
      box(3.53, 5.90, 4.55, 6.49),
      // Central block.
      box(4.81, 4.25, 5.35, 4.79),
      // Upper-right block below the initial leader.
      box(7.2, 5.6, 8.2, 6.3),
  };
  s.zones = {
      {0, 0, {3.06, 5.43}, {4.0, 6.37}},
      {1, 0, {4.59, 4.03}, {5.03, 4.47}},
  };
  return s;
}

Scenario empty_scenario() {
  Scenario s = default_scenario();
  s.workspace.obstacles.clear();
  s.zones.clear();
  return s;
}

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("", std::string("malformed JSON: ") + e.what());
  }
  Scenario s = default_scenario();
  require_object(doc, "",
                 {"schema_version", "seed", "rod", "schedule", "follower", "input_bounds", "mpc", "sensor",
                  "switch_distance", "success_radius", "cloud_resolution", "reaction_tolerance", "initial_state",
                  "workspace", "randomization_zones"});
  int version = kScenarioSchemaVersion;
  read(doc, "", "schema_version", version);
  if (version != kScenarioSchemaVersion) {
    throw ScenarioError("schema_version", "unsupported version " + std::to_string(version));
  }
  SimulationConfig& cfg = s.config;
  read(doc, "", "seed", s.seed);
  if (doc.contains("rod")) parse_rod(doc.at("rod"), "rod", cfg.rod);
  if (doc.contains("schedule")) parse_schedule(doc.at("schedule"), "schedule", cfg.schedule);
  if (doc.contains("follower")) {
    const json& f = doc.at("follower");
    require_object(f, "follower", {"critical_radius", "assist_gain"});
    read(f, "follower", "critical_radius", cfg.follower.critical_radius);
    read(f, "follower", "assist_gain", cfg.follower.assist_gain);
  }
  if (doc.contains("input_bounds")) parse_bounds(doc.at("input_bounds"), "input_bounds", cfg.follower.bounds);
  bool bound_penalty = cfg.mpc.workspace_bounds.has_value();
  if (doc.contains("mpc")) parse_mpc(doc.at("mpc"), "mpc", cfg.mpc, bound_penalty);
  if (doc.contains("sensor")) {
    const json& j = doc.at("sensor");
    require_object(j, "sensor", {"range", "rays"});
    read(j, "sensor", "range", cfg.sensor.range);
    int rays = 0;
    read(j, "sensor", "rays", rays);
    if (j.contains("rays")) {
      if (rays < 1) throw ScenarioError("sensor.rays", "expected a positive ray count");
      cfg.sensor.angular_resolution = 2.0 * std::numbers::pi / rays;
    }
  }
  read(doc, "", "switch_distance", cfg.switch_distance);
  read(doc, "", "success_radius", cfg.success_radius);
  read(doc, "", "cloud_resolution", cfg.cloud_resolution);
  read(doc, "", "reaction_tolerance", cfg.reaction_tolerance);
  if (doc.contains("initial_state")) s.initial = as_state(doc.at("initial_state"), "initial_state");
  if (doc.contains("workspace")) parse_workspace(doc.at("workspace"), "workspace", s.workspace);
  if (doc.contains("randomization_zones")) s.zones = parse_zones(doc.at("randomization_zones"), "randomization_zones");

  // Shared quantities live once in the document.
  cfg.mpc.period = cfg.schedule.period;
  cfg.mpc.bounds = cfg.follower.bounds;
  cfg.mpc.assist_gain = cfg.follower.assist_gain;
  cfg.mpc.workspace_bounds = bound_penalty ? std::optional<Bounds>(s.workspace.bounds) : std::nullopt;

  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError("", "cannot open " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

std::string to_json(const Scenario& s) {
  const SimulationConfig& c = s.config;
  json obstacles = json::array();
  for (const auto& o : s.workspace.obstacles) {
    json poly = json::array();
    for (const auto& v : o.vertices()) poly.push_back(point_json(v));
    obstacles.push_back(poly);
  }
  json zones = json::array();
  for (const auto& z : s.zones) {
    zones.push_back({{"obstacle", z.obstacle}, {"vertex", z.vertex}, {"min", point_json(z.min)}, {"max", point_json(z.max)}});
  }
  json doc = {
      {"schema_version", kScenarioSchemaVersion},
      {"seed", s.seed},
      {"rod",
       {{"leader_mass", c.rod.leader_mass},
        {"follower_mass", c.rod.follower_mass},
        {"rod_mass", c.rod.rod_mass},
        {"leader_arm", c.rod.leader_arm},
        {"follower_arm", c.rod.follower_arm}}},
      {"schedule", {{"period", c.schedule.period}, {"delay", c.schedule.delay}, {"duration", c.schedule.duration}}},
      {"follower", {{"critical_radius", c.follower.critical_radius}, {"assist_gain", c.follower.assist_gain}}},
      {"input_bounds",
       {{"axial", c.follower.bounds.axial},
        {"perpendicular", c.follower.bounds.perpendicular},
        {"torque", c.follower.bounds.torque}}},
      {"mpc",
       {{"horizon", c.mpc.horizon},
        {"state_weight", c.mpc.state_weight},
        {"input_weight", c.mpc.input_weight},
        {"target_state", state_json(c.mpc.target)},
        {"alpha_samples", c.mpc.alpha_samples},
        {"safe_distance", c.mpc.safe_distance},
        {"obstacle_weight", c.mpc.obstacle_weight},
        {"workspace_penalty", c.mpc.workspace_bounds.has_value()},
        {"max_iterations", c.mpc.max_iterations},
        {"tolerance", c.mpc.tolerance},
        {"gradient", to_string(c.mpc.gradient)},
        {"gradient_step", c.mpc.gradient_step}}},
      {"sensor", {{"range", c.sensor.range}, {"rays", c.sensor.ray_count()}}},
      {"switch_distance", c.switch_distance},
      {"success_radius", c.success_radius},
      {"cloud_resolution", c.cloud_resolution},
      {"reaction_tolerance", c.reaction_tolerance},
      {"initial_state", state_json(s.initial)},
      {"workspace",
       {{"bounds",
         {{"min_x", s.workspace.bounds.min_x},
          {"min_y", s.workspace.bounds.min_y},
          {"max_x", s.workspace.bounds.max_x},
          {"max_y", s.workspace.bounds.max_y}}},
        {"obstacles", obstacles}}},
      {"randomization_zones", zones},
  };
  return doc.dump(2) + "\n";
}

std::filesystem::path bundled_scenario_dir() { return RODSIM_SCENARIO_DIR; }

}  // namespace rodsim
