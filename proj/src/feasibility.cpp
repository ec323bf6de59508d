#include "diffplan/feasibility.hpp"

#include <algorithm>
#include <cmath>

namespace diffplan {

std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::None: return "NONE";
    case FailureReason::ObstacleHit: return "OBSTACLE_HIT";
    case FailureReason::EndpointMiss: return "ENDPOINT_MISS";
  }
  return "UNKNOWN";
}

std::vector<GridPose> supercover(Point2 a, Point2 b) {
  std::vector<GridPose> out;
  const double xlo = std::min(a.x, b.x);
  const double xhi = std::max(a.x, b.x);
  const int c0 = static_cast<int>(std::ceil(xlo - 0.5));
  const int c1 = static_cast<int>(std::floor(xhi + 0.5));
  for (int c = c0; c <= c1; ++c) {
    // Clip the segment to the closed slab [c - 0.5, c + 0.5].
    double ylo, yhi;
    if (a.x == b.x) {
      ylo = std::min(a.y, b.y);
      yhi = std::max(a.y, b.y);
    } else {
      const double s0 = std::max(xlo, c - 0.5);
      const double s1 = std::min(xhi, c + 0.5);
      if (s0 > s1) continue;
      const double slope = (b.y - a.y) / (b.x - a.x);
      const double y0 = a.y + (s0 - a.x) * slope;
      const double y1 = a.y + (s1 - a.x) * slope;
      ylo = std::min(y0, y1);
      yhi = std::max(y0, y1);
    }
    const int r0 = static_cast<int>(std::ceil(ylo - 0.5));
    const int r1 = static_cast<int>(std::floor(yhi + 0.5));
    for (int r = r0; r <= r1; ++r) out.push_back({c, r});
  }
  return out;
}

FeasibilityReport check_feasible(const OccupancyMap& map, const Trajectory& traj, GridPose start,
                                 GridPose goal) {
  FeasibilityReport report;
  if (traj.length() < 2) return report;
  if (distance(traj.front(), to_point(start)) > kEndpointTolerancePx ||
      distance(traj.back(), to_point(goal)) > kEndpointTolerancePx) {
    return report;
  }
  const double lim_x = map.width() - 0.5;
  const double lim_y = map.height() - 0.5;
  // A waypoint off the map fails before its segment is swept, which also keeps
  // supercover bounded for wild coordinates.
  auto off_map = [&](const Point2& p) -> std::optional<FeasibilityReport> {
    if (std::isfinite(p.x) && std::isfinite(p.y) && p.x >= -0.5 && p.y >= -0.5 &&
        p.x <= lim_x && p.y <= lim_y) {
      return std::nullopt;
    }
    FeasibilityReport r;
    r.failure_reason = FailureReason::ObstacleHit;
    if (std::isfinite(p.x) && std::isfinite(p.y)) {
      r.first_violation = GridPose{static_cast<int>(std::lround(std::clamp(p.x, -1.0, lim_x + 1.0))),
                                   static_cast<int>(std::lround(std::clamp(p.y, -1.0, lim_y + 1.0)))};
    }
    return r;
  };
  if (auto bad = off_map(traj.points[0])) return *bad;
  for (std::size_t i = 1; i < traj.length(); ++i) {
    if (auto bad = off_map(traj.points[i])) return *bad;
    for (const GridPose& px : supercover(traj.points[i - 1], traj.points[i])) {
      if (!map.is_free(px)) {
        report.failure_reason = FailureReason::ObstacleHit;
        report.first_violation = px;
        return report;
      }
    }
  }
  report.success = true;
  report.failure_reason = FailureReason::None;
  return report;
}

}  // namespace diffplan
