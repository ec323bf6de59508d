#include <doctest.h>

#include <deque>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "diffplan/map_gen.hpp"
#include "diffplan/map_io.hpp"
#include "helpers.hpp"

using namespace diffplan;

namespace {

std::size_t flood_count(const OccupancyMap& m, GridPose from) {
  std::vector<char> seen(m.size(), 0);
  std::deque<GridPose> queue{from};
  seen[m.index(from.x, from.y)] = 1;
  std::size_t n = 0;
  while (!queue.empty()) {
    const GridPose p = queue.front();
    queue.pop_front();
    ++n;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = p.x + dx, y = p.y + dy;
        if (m.is_free(x, y) && !seen[m.index(x, y)]) {
          seen[m.index(x, y)] = 1;
          queue.push_back({x, y});
        }
      }
    }
  }
  return n;
}

// Carved walls sit between two cells: one odd and one even coordinate.
std::size_t passages(const OccupancyMap& m) {
  std::size_t n = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m.is_free(x, y) && ((x % 2) != (y % 2))) ++n;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("occupancy map basics") {
  OccupancyMap m(4, 3, Cell::Free);
  CHECK(m.width() == 4);
  CHECK(m.height() == 3);
  CHECK(m.free_count() == 12);
  m.set(1, 2, Cell::Obstacle);
  CHECK_FALSE(m.is_free(1, 2));
  CHECK_FALSE(m.is_free(-1, 0));
  CHECK_FALSE(m.is_free(4, 0));
  CHECK(m.pose(m.index(3, 2)) == GridPose{3, 2});
  CHECK(m.to_pixels()[m.index(1, 2)] == 0);
  CHECK(m.to_pixels()[m.index(0, 0)] == 255);
  CHECK_THROWS_AS(OccupancyMap::from_pixels(2, 1, {255, 128}), MapFormatError);
  CHECK_THROWS_AS(OccupancyMap::from_pixels(2, 2, {255, 0}), MapFormatError);
}

TEST_CASE("single-cell maze") {
  const auto m = generate_maze({1, 1, 0, 3});
  CHECK(m.width() == 3);
  CHECK(m.height() == 3);
  CHECK(m.free_count() == 1);
  CHECK(m.is_free(1, 1));
}

TEST_CASE("2x2 maze has three passages and is connected") {
  const auto m = generate_maze({2, 2, 7, 5});
  CHECK(m.width() == 5);
  CHECK(m.free_count() == 4 + 3);
  CHECK(passages(m) == 3);
  CHECK(flood_count(m, {1, 1}) == m.free_count());
}

TEST_CASE("49x49 maze padded to 100 is connected") {
  const auto m = generate_maze({49, 49, 42, 100});
  CHECK(m.width() == 100);
  CHECK(m.height() == 100);
  CHECK(flood_count(m, {1, 1}) == m.free_count());
  for (int i = 0; i < 100; ++i) {
    CHECK_FALSE(m.is_free(99, i));
    CHECK_FALSE(m.is_free(i, 99));
  }
}

TEST_CASE("maze properties over many seeds") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const int cw = 1 + static_cast<int>(seed % 9);
    const int ch = 1 + static_cast<int>((seed / 3) % 7);
    const int target = 2 * std::max(cw, ch) + 1 + static_cast<int>(seed % 4);
    const MazeSpec spec{cw, ch, seed, target};
    const auto m = generate_maze(spec);
    const auto unpadded = generate_maze({cw, ch, seed, 2 * std::max(cw, ch) + 1});
    CHECK(passages(m) == static_cast<std::size_t>(cw * ch - 1));
    CHECK(flood_count(m, {1, 1}) == m.free_count());
    CHECK(m.free_count() == unpadded.free_count());
    CHECK(generate_maze(spec) == m);
  }
}

TEST_CASE("different seeds give different mazes") {
  CHECK(generate_maze({10, 10, 1, 21}) != generate_maze({10, 10, 2, 21}));
}

TEST_CASE("invalid maze specs are rejected") {
  CHECK_THROWS_AS(generate_maze({0, 3, 0, 7}), MazeSpecError);
  CHECK_THROWS_AS(generate_maze({3, 3, 0, 6}), MazeSpecError);
}

TEST_CASE("scaled maze widens corridors without changing topology") {
  const auto base = generate_maze(MazeSpec::for_size(21, 5));
  const auto wide = generate_scaled_maze(64, 3, 5);
  CHECK(wide.width() == 64);
  CHECK(wide.free_count() == base.free_count() * 9);
  CHECK(flood_count(wide, {3, 3}) == wide.free_count());
  CHECK(generate_scaled_maze(33, 1, 5) == generate_maze(MazeSpec::for_size(33, 5)));
  CHECK_THROWS_AS(generate_scaled_maze(8, 3, 0), MazeSpecError);
}

TEST_CASE("map png round trip and strict loading") {
  test::TempDir dir("map_io");
  const auto m = generate_maze({12, 12, 3, 26});
  save_map(m, dir / "m.png");
  CHECK(load_map(dir / "m.png") == m);

  cv::Mat white(100, 100, CV_8UC1, cv::Scalar(255));
  cv::imwrite((dir / "white.png").string(), white);
  const auto all_free = load_map(dir / "white.png");
  CHECK(all_free.free_count() == 10000);

  cv::Mat gray(10, 10, CV_8UC1, cv::Scalar(255));
  gray.at<std::uint8_t>(4, 4) = 128;
  cv::imwrite((dir / "gray.png").string(), gray);
  CHECK_THROWS_AS(load_map(dir / "gray.png"), MapFormatError);

  cv::Mat color(10, 10, CV_8UC3, cv::Scalar(255, 255, 255));
  cv::imwrite((dir / "color.png").string(), color);
  CHECK_THROWS_AS(load_map(dir / "color.png"), MapFormatError);

  const auto imported = import_map(dir / "gray.png");
  CHECK(imported.is_free(4, 4));
  CHECK_THROWS(load_map(dir / "missing.png"));
}

TEST_CASE("nearest resize") {
  const auto m = test::ascii_map({"#.", ".#"});
  const auto r = resize_nearest(m, 4, 4);
  CHECK_FALSE(r.is_free(0, 0));
  CHECK_FALSE(r.is_free(1, 1));
  CHECK(r.is_free(2, 0));
  CHECK(r.is_free(1, 3));
  CHECK_FALSE(r.is_free(3, 3));
}
