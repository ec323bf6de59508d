#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "diffplan/classic_planner.hpp"
#include "diffplan/feasibility.hpp"
#include "diffplan/map_gen.hpp"
#include "diffplan/random.hpp"
#include "helpers.hpp"

using namespace diffplan;

namespace {

bool contains(const std::vector<GridPose>& v, GridPose p) {
  return std::find(v.begin(), v.end(), p) != v.end();
}

}  // namespace

TEST_CASE("supercover of axis and diagonal segments") {
  const auto h = supercover({0, 0}, {3, 0});
  CHECK(h.size() == 4);
  const auto d = supercover({0, 0}, {2, 2});
  // Exact diagonals pass through pixel corners and touch both neighbours.
  CHECK(contains(d, {0, 0}));
  CHECK(contains(d, {1, 1}));
  CHECK(contains(d, {2, 2}));
  CHECK(contains(d, {1, 0}));
  CHECK(contains(d, {0, 1}));
  const auto s = supercover({0.2, 0.1}, {0.2, 0.1});
  CHECK(s == std::vector<GridPose>{{0, 0}});
  const auto shallow = supercover({0, 0}, {4, 1});
  CHECK(contains(shallow, {2, 0}));
  CHECK(contains(shallow, {2, 1}));
  CHECK_FALSE(contains(shallow, {0, 1}));
  CHECK_FALSE(contains(shallow, {4, 0}));
}

TEST_CASE("supercover is symmetric") {
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int i = 0; i < 200; ++i) {
    const Point2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
    auto ab = supercover(a, b), ba = supercover(b, a);
    auto key = [](GridPose p) { return std::pair(p.x, p.y); };
    std::sort(ab.begin(), ab.end(), [&](auto l, auto r) { return key(l) < key(r); });
    std::sort(ba.begin(), ba.end(), [&](auto l, auto r) { return key(l) < key(r); });
    CHECK(ab == ba);
  }
}

TEST_CASE("straight segment on an open map succeeds") {
  const OccupancyMap m(10, 10, Cell::Free);
  const auto r = check_feasible(m, {{{0, 0}, {9, 9}}}, {0, 0}, {9, 9});
  CHECK(r.success);
  CHECK(r.failure_reason == FailureReason::None);
  CHECK_FALSE(r.first_violation.has_value());
  CHECK(to_string(r.failure_reason) == "NONE");
}

TEST_CASE("segment through one obstacle pixel") {
  OccupancyMap m(10, 3, Cell::Free);
  m.set(5, 1, Cell::Obstacle);
  const auto r = check_feasible(m, {{{0, 1}, {9, 1}}}, {0, 1}, {9, 1});
  CHECK_FALSE(r.success);
  CHECK(r.failure_reason == FailureReason::ObstacleHit);
  REQUIRE(r.first_violation.has_value());
  CHECK(*r.first_violation == GridPose{5, 1});
  CHECK(to_string(r.failure_reason) == "OBSTACLE_HIT");
}

TEST_CASE("diagonal corner cutting is flagged") {
  const auto m = test::ascii_map({".#", ".."});
  CHECK(check_feasible(m, {{{0, 0}, {1, 1}}}, {0, 0}, {1, 1}).failure_reason == FailureReason::ObstacleHit);
  CHECK(check_feasible(m, {{{0, 0}, {0, 1}, {1, 1}}}, {0, 0}, {1, 1}).success);
}

TEST_CASE("endpoint tolerance and degenerate trajectories") {
  const OccupancyMap m(10, 10, Cell::Free);
  CHECK(check_feasible(m, {{{0.4, 0}, {9, 9}}}, {0, 0}, {9, 9}).success);
  CHECK(check_feasible(m, {{{0.3, 0.3}, {9, 9}}}, {0, 0}, {9, 9}).success);
  const auto miss = check_feasible(m, {{{0.6, 0}, {9, 9}}}, {0, 0}, {9, 9});
  CHECK(miss.failure_reason == FailureReason::EndpointMiss);
  CHECK(to_string(miss.failure_reason) == "ENDPOINT_MISS");
  CHECK(check_feasible(m, {{{0, 0}, {9, 8}}}, {0, 0}, {9, 9}).failure_reason == FailureReason::EndpointMiss);
  CHECK(check_feasible(m, {{{0, 0}}}, {0, 0}, {0, 0}).failure_reason == FailureReason::EndpointMiss);
  CHECK(check_feasible(m, {}, {0, 0}, {0, 0}).failure_reason == FailureReason::EndpointMiss);
}

TEST_CASE("off-map and non-finite waypoints are obstacle hits") {
  const OccupancyMap m(10, 10, Cell::Free);
  CHECK(check_feasible(m, {{{0, 0}, {-3, 4}, {9, 9}}}, {0, 0}, {9, 9}).failure_reason ==
        FailureReason::ObstacleHit);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(check_feasible(m, {{{0, 0}, {nan, 4}, {9, 9}}}, {0, 0}, {9, 9}).failure_reason ==
        FailureReason::ObstacleHit);
}

TEST_CASE("astar paths are feasible and adding an obstacle on them breaks feasibility") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = generate_maze(MazeSpec::for_size(31, derive_seed(77, trial)));
    const auto free = m.free_cells();
    const GridPose s = free[uniform_index(rng, free.size())];
    GridPose g = free[uniform_index(rng, free.size())];
    const auto path = astar(m, s, g);
    CHECK(check_feasible(m, path, s, g).success);
    if (path.length() < 3) continue;
    const auto& mid = path.points[path.length() / 2];
    m.set(static_cast<int>(mid.x), static_cast<int>(mid.y), Cell::Obstacle);
    const auto r = check_feasible(m, path, s, g);
    CHECK(r.failure_reason == FailureReason::ObstacleHit);
    CHECK(r.first_violation == GridPose{static_cast<int>(mid.x), static_cast<int>(mid.y)});
  }
}
