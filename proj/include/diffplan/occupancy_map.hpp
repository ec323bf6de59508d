#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace diffplan {

enum class Cell : std::uint8_t { Free = 0, Obstacle = 1 };

/// Integer pixel coordinate. x is the column, y the row.
struct GridPose {
  int x = 0;
  int y = 0;

  friend bool operator==(const GridPose&, const GridPose&) = default;
};

/// Row-major grid of free/obstacle cells. Doubles as the map image: a free
/// cell rasterizes to 255 and an obstacle to 0.
class OccupancyMap {
 public:
  OccupancyMap() = default;
  OccupancyMap(int width, int height, Cell fill = Cell::Obstacle);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool in_bounds(GridPose p) const { return in_bounds(p.x, p.y); }

  Cell at(int x, int y) const { return cells_[index(x, y)]; }
  void set(int x, int y, Cell c) { cells_[index(x, y)] = c; }

  /// Out-of-bounds coordinates are never free.
  bool is_free(int x, int y) const {
    return in_bounds(x, y) && cells_[index(x, y)] == Cell::Free;
  }
  bool is_free(GridPose p) const { return is_free(p.x, p.y); }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  GridPose pose(std::size_t idx) const {
    return {static_cast<int>(idx % static_cast<std::size_t>(width_)),
            static_cast<int>(idx / static_cast<std::size_t>(width_))};
  }

  std::size_t free_count() const;
  std::vector<GridPose> free_cells() const;

  const std::vector<Cell>& cells() const { return cells_; }

  /// 8-bit raster, 255 = free, 0 = obstacle.
  std::vector<std::uint8_t> to_pixels() const;
  static OccupancyMap from_pixels(int width, int height,
                                  const std::vector<std::uint8_t>& pixels);

  friend bool operator==(const OccupancyMap&, const OccupancyMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Cell> cells_;
};

/// Raised for malformed map files and pixel buffers.
class MapFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a query references obstacle or out-of-bounds cells.
class InvalidQueryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when start and goal are not connected.
class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_string(GridPose p);

}  // namespace diffplan
