#include "diffplan/occupancy_map.hpp"

#include <algorithm>

namespace diffplan {

OccupancyMap::OccupancyMap(int width, int height, Cell fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("OccupancyMap: dimensions must be positive, got " +
                                std::to_string(width) + "x" + std::to_string(height));
  }
  cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

std::size_t OccupancyMap::free_count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), Cell::Free));
}

std::vector<GridPose> OccupancyMap::free_cells() const {
  std::vector<GridPose> out;
  out.reserve(free_count());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (cells_[i] == Cell::Free) out.push_back(pose(i));
  }
  return out;
}

std::vector<std::uint8_t> OccupancyMap::to_pixels() const {
  std::vector<std::uint8_t> px(cells_.size());
  std::transform(cells_.begin(), cells_.end(), px.begin(),
                 [](Cell c) { return c == Cell::Free ? std::uint8_t{255} : std::uint8_t{0}; });
  return px;
}

OccupancyMap OccupancyMap::from_pixels(int width, int height,
                                       const std::vector<std::uint8_t>& pixels) {
  OccupancyMap map(width, height);
  if (pixels.size() != map.size()) {
    throw MapFormatError("pixel buffer has " + std::to_string(pixels.size()) +
                         " entries, expected " + std::to_string(map.size()));
  }
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    switch (pixels[i]) {
      case 255: map.cells_[i] = Cell::Free; break;
      case 0: map.cells_[i] = Cell::Obstacle; break;
      default: {
        const auto p = map.pose(i);
        throw MapFormatError("pixel value " + std::to_string(pixels[i]) + " at " +
                             to_string(p) + " is neither 0 nor 255");
      }
    }
  }
  return map;
}

std::string to_string(GridPose p) {
  return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

}  // namespace diffplan
