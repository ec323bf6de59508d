#include <doctest.h>

#include <fstream>

#include "diffplan/classic_planner.hpp"
#include "diffplan/evaluation.hpp"
#include "diffplan/map_gen.hpp"
#include "diffplan/render.hpp"
#include "helpers.hpp"

using namespace diffplan;

namespace {

std::vector<NamedMap> two_mazes() {
  return {{"a", generate_maze(MazeSpec::for_size(21, 1))}, {"b", generate_maze(MazeSpec::for_size(41, 2))}};
}

}  // namespace

TEST_CASE("success rate arithmetic") {
  CHECK(success_rate(7, 10) == doctest::Approx(70.0));
  CHECK(success_rate(0, 0) == 0.0);
  CHECK(success_rate(3, 3) == 100.0);
}

TEST_CASE("query sampling is deterministic and respects the window") {
  const auto maps = two_mazes();
  const auto a = sample_eval_queries(maps, 10, 4);
  const auto b = sample_eval_queries(maps, 10, 4);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].start == b[i].start);
    CHECK(a[i].goal == b[i].goal);
    CHECK_FALSE(a[i].start == a[i].goal);
  }
  const auto w = sample_eval_queries(maps, 5, 4, {20.0, 40.0});
  for (const auto& q : w) {
    CHECK(q.geodesic >= 20.0);
    CHECK(q.geodesic <= 40.0);
    CHECK(q.geodesic == doctest::Approx(dijkstra_cost(maps[q.map].map, q.start, q.goal)->value()));
  }
  CHECK_THROWS(sample_eval_queries(maps, 1, 4, {1e6, 2e6}, 50));
}

TEST_CASE("astar stub scores 100 percent") {
  const auto maps = two_mazes();
  const EvalPlanner stub = [](const OccupancyMap& m, GridPose s, GridPose g, std::uint64_t) {
    return astar(m, s, g);
  };
  const auto r = eval_success_rate(stub, maps, 10, 3, 1);
  CHECK(r.total == 60);
  CHECK(r.successes == 60);
  CHECK(r.rate() == 100.0);
  CHECK(r.per_map.size() == 2);
  CHECK(r.per_map[1].total == 30);
  std::size_t binned = 0;
  for (const auto& b : r.bins) binned += b.total;
  CHECK(binned == 60);
  const auto j = r.to_json();
  CHECK(j["rate"] == 100.0);
  CHECK(j["per_map"].size() == 2);
  CHECK(r.to_markdown().find("| **all** | 60 | 60 | 100.0 |") != std::string::npos);
}

TEST_CASE("planner errors count as failures") {
  const auto maps = two_mazes();
  int call = 0;
  const EvalPlanner flaky = [&](const OccupancyMap& m, GridPose s, GridPose g, std::uint64_t) -> Trajectory {
    if (++call % 2 == 0) throw std::runtime_error("boom");
    if (call % 3 == 0) return Trajectory{{to_point(s), to_point(g)}};
    return astar(m, s, g);
  };
  const auto q = sample_eval_queries(maps, 5, 2);
  const auto r = evaluate_queries(flaky, maps, q, 2, 0);
  CHECK(r.total == 20);
  CHECK(r.successes < 20);
  std::size_t errors = 0;
  for (const auto& o : r.outcomes) errors += !o.error.empty();
  CHECK(errors == 10);
  CHECK(r.rate() == doctest::Approx(100.0 * r.successes / 20.0));
}

TEST_CASE("length binning") {
  std::vector<EvalOutcome> o(4);
  o[0].query.geodesic = 5;
  o[0].report.success = true;
  o[1].query.geodesic = 15;
  o[2].query.geodesic = 19.9;
  o[2].report.success = true;
  o[3].query.geodesic = 45;
  const auto bins = bin_by_length(o, 10);
  REQUIRE(bins.size() == 3);
  CHECK(bins[0].lo == 0.0);
  CHECK(bins[1].total == 2);
  CHECK(bins[1].rate() == 50.0);
  CHECK(bins[2].lo == 40.0);
  CHECK_THROWS(bin_by_length(o, 0));
}

TEST_CASE("bench bookkeeping") {
  const auto maps = two_mazes();
  BenchPlanner broken{"broken", [](const OccupancyMap&, GridPose, GridPose) -> BenchTrial {
                        throw std::runtime_error("nope");
                      }};
  const auto rows = bench_timing({astar_bench_planner(), broken}, maps, 10, 3);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) CHECK(r.trials == 10);
  CHECK(rows[0].planner == "A*");
  CHECK(rows[0].failures == 0);
  CHECK(rows[0].mean_s > 0.0);
  CHECK(rows[0].mean_work > 0.0);
  CHECK(rows[1].failures == 10);
  CHECK(rows[2].map_size == 41);

  test::TempDir dir("bench");
  write_bench_csv(rows, dir / "b.csv");
  std::ifstream in(dir / "b.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "map,size,planner,mean_s,trials,failures");
  const auto table = render_bench_table(rows);
  CHECK(table.find("| a | 21 |") != std::string::npos);
  CHECK(table.find("(10 failed)") != std::string::npos);
}

TEST_CASE("plots and overlays are written") {
  test::TempDir dir("plots");
  const auto maze = generate_maze(MazeSpec::for_size(21, 1));
  save_overlay(maze, {{astar(maze, {1, 1}, {19, 19})}}, {1, 1}, {19, 19}, dir / "o.png");
  CHECK(std::filesystem::file_size(dir / "o.png") > 0);
  const std::vector<Series> s{{"x", {100, 300, 600}, {0.1, 0.5, 2.0}}};
  save_line_plot({"t", "x", "y", true}, s, dir / "p.png");
  write_series_csv(s, dir / "p.csv");
  CHECK(std::filesystem::file_size(dir / "p.png") > 0);
  std::ifstream in(dir / "p.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "series,x,y");
}
