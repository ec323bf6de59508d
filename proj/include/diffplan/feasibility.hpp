#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "diffplan/occupancy_map.hpp"
#include "diffplan/trajectory.hpp"

namespace diffplan {

enum class FailureReason { None, ObstacleHit, EndpointMiss };

std::string_view to_string(FailureReason r);

struct FeasibilityReport {
  bool success = false;
  FailureReason failure_reason = FailureReason::EndpointMiss;
  std::optional<GridPose> first_violation;
};

constexpr double kEndpointTolerancePx = 0.5;

/// Every pixel whose closed unit square (centred on the integer coordinate)
/// touches the segment a-b, ordered by column then row. Passing exactly
/// through a pixel corner reports all pixels sharing that corner.
std::vector<GridPose> supercover(Point2 a, Point2 b);

/// A trajectory is feasible when its first/last waypoints lie within 0.5 px
/// of start/goal and no pixel swept by any segment is an obstacle or outside
/// the map. Endpoints are checked first.
FeasibilityReport check_feasible(const OccupancyMap& map, const Trajectory& traj, GridPose start,
                                 GridPose goal);

}  // namespace diffplan
