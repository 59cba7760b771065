#include "rodsim/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace rodsim {
namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); }

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool within_box(const Vec2& a, const Vec2& b, const Vec2& p) {
  return p.x() >= std::min(a.x(), b.x()) && p.x() <= std::max(a.x(), b.x()) &&
         p.y() >= std::min(a.y(), b.y()) && p.y() <= std::max(a.y(), b.y());
}

double signed_area(const std::vector<Vec2>& v) {
  double area = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    area += cross(v[i], v[(i + 1) % v.size()]);
  }
  return area / 2.0;
}

// Uniform double in [0, 1) from the top 53 bits; mt19937_64's output sequence
// is fixed by the standard, unlike the distributions.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int d1 = sign(orient(q1, q2, p1));
  const int d2 = sign(orient(q1, q2, p2));
  const int d3 = sign(orient(p1, p2, q1));
  const int d4 = sign(orient(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) {
    return true;
  }
  return (d1 == 0 && within_box(q1, q2, p1)) || (d2 == 0 && within_box(q1, q2, p2)) ||
         (d3 == 0 && within_box(p1, p2, q1)) || (d4 == 0 && within_box(p1, p2, q2));
}

double ray_segment_distance(const Vec2& origin, const Vec2& dir, const Vec2& a, const Vec2& b) {
  const Vec2 edge = b - a;
  const double denom = cross(dir, edge);
  if (std::abs(denom) < 1e-15) {
    return -1.0;
  }
  const Vec2 rel = a - origin;
  const double t = cross(rel, edge) / denom;
  const double s = cross(rel, dir) / denom;
  if (t < 0.0 || s < 0.0 || s > 1.0) {
    return -1.0;
  }
  return t;
}

Obstacle::Obstacle(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) {
    throw std::invalid_argument("obstacle needs at least 3 vertices, got " + std::to_string(n));
  }
  for (const auto& v : vertices_) {
    if (!v.allFinite()) {
      throw std::invalid_argument("obstacle vertex is not finite");
    }
  }
  const double area = signed_area(vertices_);
  if (std::abs(area) < 1e-12) {
    throw std::invalid_argument("obstacle polygon has zero area");
  }
  if (area < 0.0) {
    std::reverse(vertices_.begin() + 1, vertices_.end());
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (!adjacent && segments_intersect(edge_start(i), edge_end(i), edge_start(j), edge_end(j))) {
        throw std::invalid_argument("obstacle polygon is self-intersecting");
      }
    }
  }
}

bool Obstacle::contains(const Vec2& p) const {
  bool inside = false;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Vec2 a = edge_start(i);
    const Vec2 b = edge_end(i);
    if (orient(a, b, p) == 0.0 && within_box(a, b, p)) {
      return true;
    }
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x_cross = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x_cross) {
        inside = !inside;
      }
    }
  }
  return inside;
}

Obstacle Obstacle::translated(const Vec2& offset) const {
  Obstacle out = *this;
  for (auto& v : out.vertices_) {
    v += offset;
  }
  return out;
}

Obstacle Obstacle::placed_at(std::size_t vertex, const Vec2& anchor) const {
  Obstacle out = translated(anchor - vertices_.at(vertex));
  out.vertices_[vertex] = anchor;
  return out;
}

void Bounds::validate() const {
  if (!(max_x > min_x) || !(max_y > min_y)) {
    throw std::invalid_argument("workspace bounds are empty");
  }
}

void Workspace::validate() const {
  bounds.validate();
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    for (const auto& v : obstacles[i].vertices()) {
      if (!bounds.contains(v)) {
        throw std::invalid_argument("obstacle " + std::to_string(i) + " has a vertex outside the workspace");
      }
    }
  }
}

int SensorConfig::ray_count() const {
  const double rays = 2.0 * std::numbers::pi / angular_resolution;
  const double rounded = std::round(rays);
  if (!(angular_resolution > 0.0) || std::abs(rays - rounded) > 1e-6 || rounded < 1.0) {
    throw std::invalid_argument("sensor angular resolution must divide 2*pi");
  }
  return static_cast<int>(rounded);
}

void SensorConfig::validate() const {
  if (!(range > 0.0)) {
    throw std::invalid_argument("sensor range must be positive");
  }
  ray_count();
}

SenseResult sense(const Workspace& workspace, const Vec2& origin, const SensorConfig& cfg) {
  SenseResult result;
  for (const auto& obstacle : workspace.obstacles) {
    if (obstacle.contains(origin)) {
      result.blocked = true;
      return result;
    }
  }
  const int rays = cfg.ray_count();
  for (int k = 0; k < rays; ++k) {
    const double angle = k * cfg.angular_resolution;
    const Vec2 dir(std::cos(angle), std::sin(angle));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& obstacle : workspace.obstacles) {
      for (std::size_t i = 0; i < obstacle.size(); ++i) {
        const double t = ray_segment_distance(origin, dir, obstacle.edge_start(i), obstacle.edge_end(i));
        if (t >= 0.0 && t < best) {
          best = t;
        }
      }
    }
    if (best <= cfg.range) {
      result.hits.push_back(origin + best * dir);
    }
  }
  return result;
}

bool rod_collides(const Workspace& workspace, const Vec2& leader_pos, const Vec2& follower_pos) {
  if (!workspace.bounds.contains(leader_pos) || !workspace.bounds.contains(follower_pos)) {
    return true;
  }
  for (const auto& obstacle : workspace.obstacles) {
    if (obstacle.contains(leader_pos) || obstacle.contains(follower_pos)) {
      return true;
    }
    for (std::size_t i = 0; i < obstacle.size(); ++i) {
      if (segments_intersect(leader_pos, follower_pos, obstacle.edge_start(i), obstacle.edge_end(i))) {
        return true;
      }
    }
  }
  return false;
}

const char* to_string(PointSource source) {
  switch (source) {
    case PointSource::LeaderSensed:
      return "leader_sensed";
    case PointSource::FollowerSensed:
      return "follower_sensed";
    case PointSource::Inferred:
      return "inferred";
  }
  return "unknown";
}

PointCloud::PointCloud(double resolution) : resolution_(resolution) {
  if (!(resolution > 0.0)) {
    throw std::invalid_argument("point cloud resolution must be positive");
  }
}

std::int64_t PointCloud::cell(double v) const {
  return static_cast<std::int64_t>(std::floor(v / resolution_));
}

PointCloud::CellKey PointCloud::key(std::int64_t cx, std::int64_t cy) const {
  return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xffffffffULL);
}

bool PointCloud::has_near(const Vec2& p) const {
  const std::int64_t cx = cell(p.x());
  const std::int64_t cy = cell(p.y());
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      const auto it = cells_.find(key(cx + dx, cy + dy));
      if (it == cells_.end()) {
        continue;
      }
      for (const auto idx : it->second) {
        if ((points_[idx].position - p).norm() < resolution_) {
          return true;
        }
      }
    }
  }
  return false;
}

bool PointCloud::insert(const CloudPoint& point) {
  if (!point.position.allFinite() || has_near(point.position)) {
    return false;
  }
  cells_[key(cell(point.position.x()), cell(point.position.y()))].push_back(
      static_cast<std::uint32_t>(points_.size()));
  points_.push_back(point);
  return true;
}

std::vector<Vec2> PointCloud::positions() const {
  std::vector<Vec2> out;
  out.reserve(points_.size());
  for (const auto& p : points_) {
    out.push_back(p.position);
  }
  return out;
}

PointCloud accumulate(PointCloud cloud, std::span<const Vec2> new_points, PointSource source, int step) {
  for (const auto& p : new_points) {
    cloud.insert({p, source, step});
  }
  return cloud;
}

Workspace randomize_scenario(const Workspace& base, std::span<const RandomizationZone> zones,
                             std::uint64_t seed) {
  constexpr int kMaxAttempts = 100;
  Workspace out = base;
  std::mt19937_64 rng(seed);
  for (const auto& zone : zones) {
    if (zone.obstacle >= out.obstacles.size()) {
      throw std::invalid_argument("randomization zone references missing obstacle " +
                                  std::to_string(zone.obstacle));
    }
    const Obstacle& original = base.obstacles[zone.obstacle];
    if (zone.vertex >= original.size()) {
      throw std::invalid_argument("randomization zone references missing vertex");
    }
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const double ux = uniform01(rng);
      const double uy = uniform01(rng);
      const Vec2 anchor(zone.min.x() + ux * (zone.max.x() - zone.min.x()),
                        zone.min.y() + uy * (zone.max.y() - zone.min.y()));
      Obstacle moved = original.placed_at(zone.vertex, anchor);
      placed = std::all_of(moved.vertices().begin(), moved.vertices().end(),
                           [&](const Vec2& v) { return out.bounds.contains(v); });
      if (placed) {
        out.obstacles[zone.obstacle] = std::move(moved);
      }
    }
    if (!placed) {
      throw std::runtime_error("could not place obstacle " + std::to_string(zone.obstacle) +
                               " inside the workspace");
    }
  }
  return out;
}

}  // namespace rodsim
