#include "diffplan/map_gen.hpp"

#include <algorithm>
#include <numeric>

#include "diffplan/random.hpp"

namespace diffplan {

MazeSpec MazeSpec::for_size(int target_size, std::uint64_t seed) {
  const int cells = std::max(1, (target_size - 1) / 2);
  return MazeSpec{cells, cells, seed, target_size};
}

void validate(const MazeSpec& spec) {
  if (spec.cells_w <= 0 || spec.cells_h <= 0) {
    throw MazeSpecError("maze cell counts must be positive");
  }
  if (spec.target_size <= 0) throw MazeSpecError("target_size must be positive");
  const int needed = 2 * std::max(spec.cells_w, spec.cells_h) + 1;
  if (spec.target_size < needed) {
    throw MazeSpecError("target_size " + std::to_string(spec.target_size) +
                        " is smaller than the maze raster (" + std::to_string(needed) + ")");
  }
}

DisjointSet::DisjointSet(std::size_t n) : parent_(n), size_(n, 1), sets_(n) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t DisjointSet::find(std::size_t v) {
  std::size_t root = v;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[v] != root) {
    const std::size_t next = parent_[v];
    parent_[v] = root;
    v = next;
  }
  return root;
}

bool DisjointSet::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  --sets_;
  return true;
}

namespace {

struct WallEdge {
  std::uint64_t weight;
  std::size_t cell_a;
  std::size_t cell_b;
  int wall_x;
  int wall_y;
};

}  // namespace

OccupancyMap generate_maze(const MazeSpec& spec) {
  validate(spec);
  const int cw = spec.cells_w;
  const int ch = spec.cells_h;
  OccupancyMap map(spec.target_size, spec.target_size, Cell::Obstacle);

  auto cell_id = [cw](int cx, int cy) { return static_cast<std::size_t>(cy) * cw + cx; };
  for (int cy = 0; cy < ch; ++cy) {
    for (int cx = 0; cx < cw; ++cx) map.set(2 * cx + 1, 2 * cy + 1, Cell::Free);
  }

  Rng rng(spec.seed);
  std::vector<WallEdge> walls;
  walls.reserve(static_cast<std::size_t>(2 * cw * ch));
  for (int cy = 0; cy < ch; ++cy) {
    for (int cx = 0; cx < cw; ++cx) {
      if (cx + 1 < cw) {
        walls.push_back({rng(), cell_id(cx, cy), cell_id(cx + 1, cy), 2 * cx + 2, 2 * cy + 1});
      }
      if (cy + 1 < ch) {
        walls.push_back({rng(), cell_id(cx, cy), cell_id(cx, cy + 1), 2 * cx + 1, 2 * cy + 2});
      }
    }
  }
  // Stable on ties so equal weights keep generation order.
  std::stable_sort(walls.begin(), walls.end(),
                   [](const WallEdge& a, const WallEdge& b) { return a.weight < b.weight; });

  DisjointSet sets(static_cast<std::size_t>(cw) * ch);
  for (const auto& w : walls) {
    if (sets.set_count() == 1) break;
    if (sets.unite(w.cell_a, w.cell_b)) map.set(w.wall_x, w.wall_y, Cell::Free);
  }
  return map;
}

OccupancyMap generate_scaled_maze(int size, int corridor_width, std::uint64_t seed) {
  if (corridor_width < 1) throw MazeSpecError("corridor width must be >= 1");
  const int raster = size / corridor_width;
  if (raster < 3) throw MazeSpecError("map size too small for the corridor width");
  const OccupancyMap base = generate_maze(MazeSpec::for_size(raster, seed));
  if (corridor_width == 1) return base;
  OccupancyMap out(size, size, Cell::Obstacle);
  for (int y = 0; y < raster * corridor_width; ++y) {
    for (int x = 0; x < raster * corridor_width; ++x) {
      out.set(x, y, base.at(x / corridor_width, y / corridor_width));
    }
  }
  return out;
}

}  // namespace diffplan
