#pragma once

#include <filesystem>
#include <vector>

#include "diffplan/occupancy_map.hpp"

namespace diffplan {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 to_point(GridPose p) { return {static_cast<double>(p.x), static_cast<double>(p.y)}; }

double distance(Point2 a, Point2 b);

/// Ordered waypoints in pixel coordinates, start first.
struct Trajectory {
  std::vector<Point2> points;

  std::size_t length() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point2& front() const { return points.front(); }
  const Point2& back() const { return points.back(); }

  /// Sum of segment lengths.
  double arc_length() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// One `x,y` row per waypoint, no header, full round-trip precision.
void save_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);
Trajectory load_trajectory_csv(const std::filesystem::path& path);

}  // namespace diffplan
