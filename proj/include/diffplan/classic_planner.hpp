#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "diffplan/occupancy_map.hpp"
#include "diffplan/trajectory.hpp"

namespace diffplan {

/// Exact 8-connected path cost: straight + diagonal * sqrt(2).
///
/// Counts are kept as integers and compared exactly (sqrt(2) is irrational, so
/// equal costs imply equal counts). This makes "A* cost == Dijkstra cost" an
/// exact check instead of a floating-point one.
struct PathCost {
  std::int64_t straight = 0;
  std::int64_t diagonal = 0;

  double value() const;

  PathCost operator+(const PathCost& o) const {
    return {straight + o.straight, diagonal + o.diagonal};
  }
  friend bool operator==(const PathCost&, const PathCost&) = default;
  friend std::strong_ordering operator<=>(const PathCost& a, const PathCost& b);
};

/// Octile distance between two cells.
PathCost octile(GridPose a, GridPose b);

struct SearchResult {
  Trajectory path;
  PathCost cost;
  std::size_t expansions = 0;
};

/// A* over the 8-connected free cells. Straight moves cost 1, diagonal moves
/// sqrt(2) and are only allowed when both orthogonally adjacent cells are
/// free. Ties on f are broken by larger g, then by insertion order.
///
/// Throws InvalidQueryError if start or goal is not a free cell and
/// NoPathError if they are not connected.
SearchResult astar_search(const OccupancyMap& map, GridPose start, GridPose goal);

inline Trajectory astar(const OccupancyMap& map, GridPose start, GridPose goal) {
  return astar_search(map, start, goal).path;
}

/// Per-cell travel cost from a source; obstacles and unreachable cells hold
/// +infinity.
class GeodesicField {
 public:
  GeodesicField(int width, int height, std::vector<std::optional<PathCost>> costs);

  int width() const { return width_; }
  int height() const { return height_; }
  bool reachable(GridPose p) const;
  std::optional<PathCost> exact(GridPose p) const;
  /// Travel cost, or +infinity when unreachable.
  double at(GridPose p) const;

 private:
  int width_;
  int height_;
  std::vector<std::optional<PathCost>> costs_;
};

/// Uniform-cost expansion from source over the same move set as astar.
GeodesicField geodesic_field(const OccupancyMap& map, GridPose source);

/// Full Dijkstra reference used to validate astar; nullopt when unreachable.
std::optional<PathCost> dijkstra_cost(const OccupancyMap& map, GridPose start, GridPose goal);

/// Legal moves out of a cell, with their costs. Shared by every search here.
struct Move {
  GridPose to;
  PathCost cost;
};
std::vector<Move> neighbors(const OccupancyMap& map, GridPose from);

}  // namespace diffplan
