#include <doctest.h>

#include <cmath>

#include "diffplan/classic_planner.hpp"
#include "diffplan/map_gen.hpp"
#include "diffplan/random.hpp"
#include "helpers.hpp"

using namespace diffplan;

TEST_CASE("path cost compares exactly") {
  CHECK(PathCost{3, 0} < PathCost{0, 3});
  CHECK(PathCost{1, 0} > PathCost{0, 0});
  CHECK(PathCost{0, 2} < PathCost{3, 0});  // 2.828 < 3
  CHECK(PathCost{2, 0} < PathCost{0, 2});
  CHECK(PathCost{7, 5} == PathCost{7, 5});
  CHECK(PathCost{0, 5} < PathCost{0, 0} + PathCost{8, 0});  // 7.07 < 8
  CHECK(PathCost{0, 5} > PathCost{7, 0});                   // 7.07 > 7
  CHECK(octile({0, 0}, {5, 2}) == PathCost{3, 2});
}

TEST_CASE("start equals goal") {
  const OccupancyMap m(3, 3, Cell::Free);
  const auto r = astar_search(m, {1, 1}, {1, 1});
  CHECK(r.path.length() == 1);
  CHECK(r.cost.value() == 0.0);
}

TEST_CASE("diagonal on an open 3x3 map") {
  const OccupancyMap m(3, 3, Cell::Free);
  const auto r = astar_search(m, {0, 0}, {2, 2});
  REQUIRE(r.path.length() == 3);
  CHECK(r.path.points[1] == Point2{1, 1});
  CHECK(r.cost.value() == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(dijkstra_cost(m, {0, 0}, {2, 2}) == r.cost);
}

TEST_CASE("no corner cutting") {
  const auto m = test::ascii_map({".#", ".."});
  CHECK(astar_search(m, {0, 0}, {1, 1}).cost == PathCost{2, 0});
  const auto blocked = test::ascii_map({".#", "#."});
  CHECK_THROWS_AS(astar(blocked, {0, 0}, {1, 1}), NoPathError);
}

TEST_CASE("invalid queries") {
  const auto m = test::ascii_map({"..#", "...", "#.."});
  CHECK_THROWS_AS(astar(m, {2, 0}, {0, 0}), InvalidQueryError);
  CHECK_THROWS_AS(astar(m, {0, 0}, {5, 5}), InvalidQueryError);
  CHECK_THROWS_AS(geodesic_field(m, {2, 0}), InvalidQueryError);
  const auto sealed = test::ascii_map({"..#..", "..#..", "..#.."});
  CHECK_THROWS_AS(astar(sealed, {0, 0}, {4, 2}), NoPathError);
  CHECK_FALSE(dijkstra_cost(sealed, {0, 0}, {4, 2}).has_value());
}

TEST_CASE("geodesic field on a corridor") {
  const OccupancyMap corridor(5, 1, Cell::Free);
  const auto f = geodesic_field(corridor, {0, 0});
  for (int x = 0; x < 5; ++x) CHECK(f.at({x, 0}) == doctest::Approx(x));
  const auto m = test::ascii_map({"...#.", "...#."});
  const auto g = geodesic_field(m, {0, 0});
  CHECK(g.at({0, 0}) == 0.0);
  CHECK(std::isinf(g.at({4, 0})));
  CHECK(std::isinf(g.at({3, 0})));
  CHECK_FALSE(g.reachable({4, 1}));
}

TEST_CASE("astar agrees with the oracle and field on mazes") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto m = generate_maze(MazeSpec::for_size(21 + 2 * (trial % 10), derive_seed(5, trial)));
    const auto free = m.free_cells();
    const GridPose s = free[uniform_index(rng, free.size())];
    const GridPose g = free[uniform_index(rng, free.size())];
    const auto r = astar_search(m, s, g);
    CHECK(r.cost == dijkstra_cost(m, s, g));
    CHECK(geodesic_field(m, s).exact(g) == r.cost);
    CHECK(r.path.front() == to_point(s));
    CHECK(r.path.back() == to_point(g));
    PathCost walked;
    for (std::size_t i = 0; i < r.path.length(); ++i) {
      const auto& p = r.path.points[i];
      CHECK(m.is_free(static_cast<int>(p.x), static_cast<int>(p.y)));
      if (i > 0) {
        const auto& q = r.path.points[i - 1];
        const int dx = static_cast<int>(std::abs(p.x - q.x)), dy = static_cast<int>(std::abs(p.y - q.y));
        CHECK(std::max(dx, dy) == 1);
        walked = walked + (dx + dy == 2 ? PathCost{0, 1} : PathCost{1, 0});
      }
    }
    CHECK(walked == r.cost);
  }
}

TEST_CASE("octile heuristic is admissible on open maps with obstacles") {
  Rng rng(3);
  OccupancyMap m(15, 15, Cell::Free);
  for (int i = 0; i < 60; ++i) {
    m.set(static_cast<int>(uniform_index(rng, 15)), static_cast<int>(uniform_index(rng, 15)), Cell::Obstacle);
  }
  m.set(0, 0, Cell::Free);
  const auto f = geodesic_field(m, {0, 0});
  for (const auto& p : m.free_cells()) {
    if (f.reachable(p)) CHECK(octile({0, 0}, p) <= *f.exact(p));
  }
}

TEST_CASE("astar is deterministic") {
  const auto m = generate_maze(MazeSpec::for_size(41, 9));
  const OccupancyMap open(30, 30, Cell::Free);
  CHECK(astar_search(open, {0, 3}, {27, 20}).path == astar_search(open, {0, 3}, {27, 20}).path);
  CHECK(astar(m, {1, 1}, {39, 39}) == astar(m, {1, 1}, {39, 39}));
}
