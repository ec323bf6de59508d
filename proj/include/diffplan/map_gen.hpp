#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffplan/occupancy_map.hpp"

namespace diffplan {

/// Parameters of a perfect maze. Cells sit at odd raster coordinates with
/// walls between them, so the unpadded raster is (2*cells_w+1) x (2*cells_h+1).
struct MazeSpec {
  int cells_w = 1;
  int cells_h = 1;
  std::uint64_t seed = 0;
  int target_size = 3;

  /// Largest square maze that fits a target_size raster.
  static MazeSpec for_size(int target_size, std::uint64_t seed);
};

class MazeSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void validate(const MazeSpec& spec);

/// Union-find with path compression and union by size.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n);

  std::size_t find(std::size_t v);
  /// Returns false when a and b were already in the same set.
  bool unite(std::size_t a, std::size_t b);
  std::size_t set_count() const { return sets_; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::size_t sets_;
};

/// Randomized Kruskal maze: every potential wall gets a weight from the seeded
/// generator, walls are visited in weight order and removed whenever they join
/// two disjoint cell sets. The raster is padded with obstacle rows/columns at
/// the bottom/right up to target_size x target_size.
OccupancyMap generate_maze(const MazeSpec& spec);

/// size x size perfect maze whose passages and walls are corridor_width
/// pixels thick: a maze for floor(size / corridor_width) is generated and
/// each pixel is replicated into a corridor_width square, then padded with
/// obstacles at the bottom/right. corridor_width 1 equals
/// generate_maze(MazeSpec::for_size(size, seed)).
OccupancyMap generate_scaled_maze(int size, int corridor_width, std::uint64_t seed);

}  // namespace diffplan
