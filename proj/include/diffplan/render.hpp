#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "diffplan/occupancy_map.hpp"
#include "diffplan/trajectory.hpp"

namespace diffplan {

using Rgb = std::array<std::uint8_t, 3>;

struct OverlayPath {
  Trajectory trajectory;
  Rgb color{220, 40, 40};
};

/// Map in gray/white with each path drawn as a polyline, the start marked
/// green and the goal marked blue. `scale` enlarges each map pixel.
void save_overlay(const OccupancyMap& map, const std::vector<OverlayPath>& paths, GridPose start,
                  GridPose goal, const std::filesystem::path& png, int scale = 4);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  Rgb color{30, 90, 200};
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  int width = 800;
  int height = 500;
};

/// Simple line plot with markers, axes, ticks and a legend.
void save_line_plot(const PlotSpec& spec, const std::vector<Series>& series,
                    const std::filesystem::path& png);

/// Long-form CSV with columns series,x,y.
void write_series_csv(const std::vector<Series>& series, const std::filesystem::path& csv);

}  // namespace diffplan
