#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "rodsim/dynamics.hpp"

namespace rodsim {

/// Simple polygon, stored counter-clockwise. Vertex 0 keeps its identity when
/// the input order is reversed during canonicalization.
class Obstacle {
 public:
  /// Throws std::invalid_argument for fewer than 3 vertices, zero area, or
  /// self-intersection.
  explicit Obstacle(std::vector<Vec2> vertices);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  Vec2 edge_start(std::size_t i) const { return vertices_[i]; }
  Vec2 edge_end(std::size_t i) const { return vertices_[(i + 1) % vertices_.size()]; }

  /// True for interior and boundary points.
  bool contains(const Vec2& p) const;
  Obstacle translated(const Vec2& offset) const;
  /// Translated copy whose given vertex lands exactly on `anchor`.
  Obstacle placed_at(std::size_t vertex, const Vec2& anchor) const;

 private:
  std::vector<Vec2> vertices_;
};

/// Axis-aligned workspace rectangle.
struct Bounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 9.0;
  double max_y = 9.0;

  bool contains(const Vec2& p) const {
    return p.x() >= min_x && p.x() <= max_x && p.y() >= min_y && p.y() <= max_y;
  }
  void validate() const;
  bool operator==(const Bounds&) const = default;
};

struct Workspace {
  Bounds bounds;
  std::vector<Obstacle> obstacles;

  /// Throws std::invalid_argument if an obstacle vertex lies outside the bounds.
  void validate() const;
};

struct SensorConfig {
  double range = 1.2;
  double angular_resolution = 3.6 * std::numbers::pi / 180.0;

  /// Number of rays in one full sweep; throws unless the resolution divides 2*pi.
  int ray_count() const;
  void validate() const;
};

struct SenseResult {
  std::vector<Vec2> hits;
  /// Sensor origin lies inside an obstacle; callers treat this as a collision.
  bool blocked = false;
};

/// Lidar-like sweep: nearest boundary hit per ray, within range.
SenseResult sense(const Workspace& workspace, const Vec2& origin, const SensorConfig& cfg);

/// Closed segment / closed segment intersection.
bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2);

/// Distance along a unit ray to a segment, or a negative value on a miss.
double ray_segment_distance(const Vec2& origin, const Vec2& dir, const Vec2& a, const Vec2& b);

/// True when the rod segment touches any obstacle or leaves the workspace.
bool rod_collides(const Workspace& workspace, const Vec2& leader_pos, const Vec2& follower_pos);

enum class PointSource { LeaderSensed, FollowerSensed, Inferred };

const char* to_string(PointSource source);

struct CloudPoint {
  Vec2 position = Vec2::Zero();
  PointSource source = PointSource::LeaderSensed;
  int step = 0;
};

/// Accumulated obstacle points. A new point is dropped when an existing point
/// lies closer than the resolution, so the cloud only ever grows.
class PointCloud {
 public:
  explicit PointCloud(double resolution = 0.01);

  /// Returns true if the point was added.
  bool insert(const CloudPoint& point);
  bool has_near(const Vec2& p) const;

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  double resolution() const { return resolution_; }
  const std::vector<CloudPoint>& points() const { return points_; }
  std::vector<Vec2> positions() const;

 private:
  using CellKey = std::uint64_t;
  CellKey key(std::int64_t cx, std::int64_t cy) const;
  std::int64_t cell(double v) const;

  double resolution_;
  std::vector<CloudPoint> points_;
  std::unordered_map<CellKey, std::vector<std::uint32_t>> cells_;
};

PointCloud accumulate(PointCloud cloud, std::span<const Vec2> new_points,
                      PointSource source = PointSource::LeaderSensed, int step = 0);

/// Region where a chosen obstacle vertex is placed uniformly at random.
struct RandomizationZone {
  std::size_t obstacle = 0;
  std::size_t vertex = 0;
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();
};

/// Translates each zoned obstacle so its anchor vertex is uniform in the zone.
/// Deterministic in the seed. Throws std::runtime_error if a translated
/// obstacle cannot be kept inside the bounds after repeated resampling.
Workspace randomize_scenario(const Workspace& base, std::span<const RandomizationZone> zones,
                             std::uint64_t seed);

}  // namespace rodsim
