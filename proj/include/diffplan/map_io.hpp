#pragma once

#include <filesystem>

#include "diffplan/occupancy_map.hpp"

namespace diffplan {

/// Writes an 8-bit single-channel lossless PNG (255 free, 0 obstacle).
void save_map(const OccupancyMap& map, const std::filesystem::path& path);

/// Strict loader for files written by save_map. Anything but an 8-bit
/// single-channel image holding only 0 and 255 raises MapFormatError.
OccupancyMap load_map(const std::filesystem::path& path);

/// Lenient loader for foreign maps of any size or color: converts to
/// grayscale and thresholds at mid-level (>= 128 is free).
OccupancyMap import_map(const std::filesystem::path& path, int threshold = 128);

/// Nearest-neighbour resampling to width x height.
OccupancyMap resize_nearest(const OccupancyMap& map, int width, int height);

}  // namespace diffplan
