#include "diffplan/classic_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace diffplan {

double PathCost::value() const {
  return static_cast<double>(straight) + static_cast<double>(diagonal) * std::numbers::sqrt2;
}

// Compare a1 + b1*r with a2 + b2*r for r = sqrt(2): reduce to d vs e*r with
// d = a1 - a2, e = b2 - b1, then compare squares when signs agree.
std::strong_ordering operator<=>(const PathCost& a, const PathCost& b) {
  const std::int64_t d = a.straight - b.straight;
  const std::int64_t e = b.diagonal - a.diagonal;
  if (d == 0 && e == 0) return std::strong_ordering::equal;
  if (d >= 0 && e <= 0) return std::strong_ordering::greater;
  if (d <= 0 && e >= 0) return std::strong_ordering::less;
  const std::int64_t d2 = d * d;
  const std::int64_t e2 = 2 * e * e;
  if (d > 0) return d2 > e2 ? std::strong_ordering::greater : std::strong_ordering::less;
  return d2 > e2 ? std::strong_ordering::less : std::strong_ordering::greater;
}

PathCost octile(GridPose a, GridPose b) {
  const std::int64_t dx = std::abs(a.x - b.x);
  const std::int64_t dy = std::abs(a.y - b.y);
  return {std::max(dx, dy) - std::min(dx, dy), std::min(dx, dy)};
}

std::vector<Move> neighbors(const OccupancyMap& map, GridPose from) {
  std::vector<Move> out;
  out.reserve(8);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const GridPose to{from.x + dx, from.y + dy};
      if (!map.is_free(to)) continue;
      if (dx != 0 && dy != 0) {
        // No corner cutting: both orthogonal neighbours must be free.
        if (!map.is_free(from.x + dx, from.y) || !map.is_free(from.x, from.y + dy)) continue;
        out.push_back({to, {0, 1}});
      } else {
        out.push_back({to, {1, 0}});
      }
    }
  }
  return out;
}

namespace {

void require_free(const OccupancyMap& map, GridPose p, const char* what) {
  if (!map.in_bounds(p)) {
    throw InvalidQueryError(std::string(what) + " " + to_string(p) + " is outside the map");
  }
  if (!map.is_free(p)) {
    throw InvalidQueryError(std::string(what) + " " + to_string(p) + " is an obstacle");
  }
}

struct OpenEntry {
  PathCost f;
  PathCost g;
  std::uint64_t order;
  std::size_t cell;
};

// priority_queue pops the "largest"; define largest = best.
struct WorseEntry {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g < b.g;
    return a.order > b.order;
  }
};

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

}  // namespace

SearchResult astar_search(const OccupancyMap& map, GridPose start, GridPose goal) {
  require_free(map, start, "start");
  require_free(map, goal, "goal");

  const std::size_t n = map.size();
  std::vector<std::optional<PathCost>> g(n);
  std::vector<std::size_t> parent(n, kNone);
  std::vector<bool> closed(n, false);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, WorseEntry> open;
  std::uint64_t order = 0;

  const std::size_t s = map.index(start.x, start.y);
  const std::size_t t = map.index(goal.x, goal.y);
  g[s] = PathCost{};
  open.push({octile(start, goal), PathCost{}, order++, s});

  SearchResult result;
  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    if (closed[top.cell]) continue;
    closed[top.cell] = true;
    ++result.expansions;
    if (top.cell == t) break;
    const GridPose here = map.pose(top.cell);
    for (const auto& mv : neighbors(map, here)) {
      const std::size_t nb = map.index(mv.to.x, mv.to.y);
      if (closed[nb]) continue;
      const PathCost cand = top.g + mv.cost;
      if (!g[nb] || cand < *g[nb]) {
        g[nb] = cand;
        parent[nb] = top.cell;
        open.push({cand + octile(mv.to, goal), cand, order++, nb});
      }
    }
  }
  if (!closed[t]) {
    throw NoPathError("no path from " + to_string(start) + " to " + to_string(goal));
  }

  std::vector<Point2> rev;
  for (std::size_t c = t; c != kNone; c = parent[c]) rev.push_back(to_point(map.pose(c)));
  result.path.points.assign(rev.rbegin(), rev.rend());
  result.cost = *g[t];
  return result;
}

GeodesicField::GeodesicField(int width, int height, std::vector<std::optional<PathCost>> costs)
    : width_(width), height_(height), costs_(std::move(costs)) {}

bool GeodesicField::reachable(GridPose p) const { return exact(p).has_value(); }

std::optional<PathCost> GeodesicField::exact(GridPose p) const {
  if (p.x < 0 || p.y < 0 || p.x >= width_ || p.y >= height_) return std::nullopt;
  return costs_[static_cast<std::size_t>(p.y) * width_ + p.x];
}

double GeodesicField::at(GridPose p) const {
  const auto c = exact(p);
  return c ? c->value() : std::numeric_limits<double>::infinity();
}

GeodesicField geodesic_field(const OccupancyMap& map, GridPose source) {
  require_free(map, source, "source");
  std::vector<std::optional<PathCost>> dist(map.size());
  std::vector<bool> done(map.size(), false);
  struct Entry {
    PathCost d;
    std::size_t cell;
  };
  auto worse = [](const Entry& a, const Entry& b) { return a.d > b.d; };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
  const std::size_t s = map.index(source.x, source.y);
  dist[s] = PathCost{};
  heap.push({PathCost{}, s});
  while (!heap.empty()) {
    const Entry e = heap.top();
    heap.pop();
    if (done[e.cell]) continue;
    done[e.cell] = true;
    for (const auto& mv : neighbors(map, map.pose(e.cell))) {
      const std::size_t nb = map.index(mv.to.x, mv.to.y);
      const PathCost cand = e.d + mv.cost;
      if (!dist[nb] || cand < *dist[nb]) {
        dist[nb] = cand;
        heap.push({cand, nb});
      }
    }
  }
  return GeodesicField(map.width(), map.height(), std::move(dist));
}

std::optional<PathCost> dijkstra_cost(const OccupancyMap& map, GridPose start, GridPose goal) {
  require_free(map, goal, "goal");
  return geodesic_field(map, start).exact(goal);
}

}  // namespace diffplan
