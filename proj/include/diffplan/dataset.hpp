#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "diffplan/diffusion.hpp"
#include "diffplan/occupancy_map.hpp"
#include "diffplan/random.hpp"
#include "diffplan/trajectory.hpp"

namespace diffplan {

constexpr int kDatasetFormatVersion = 1;
constexpr int kDefaultHorizon = 180;
/// Shortest demonstration kept when sampling start/goal pairs, in waypoints.
constexpr std::size_t kMinDemoPoints = 10;

struct TrajectoryEntry {
  std::size_t map = 0;
  std::size_t index = 0;
  std::string file;  // relative to the dataset root
  GridPose start;
  GridPose goal;
  std::size_t length = 0;  // waypoint count
};

struct DatasetManifest {
  std::size_t n_maps = 0;
  std::size_t trajs_per_map = 0;
  int map_size = 0;
  int corridor_width = 1;
  std::uint64_t seed = 0;
  int horizon = kDefaultHorizon;
  int format_version = kDatasetFormatVersion;
  std::vector<std::string> maps;  // relative to the dataset root
  std::vector<TrajectoryEntry> trajectories;
};

struct DatasetParams {
  std::size_t n_maps = 1;
  std::size_t trajs_per_map = 1;
  int map_size = 100;
  /// Passage width in pixels of the generated mazes.
  int corridor_width = 1;
  std::uint64_t seed = 0;
  int horizon = kDefaultHorizon;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string map_file_name(std::size_t map_index);
std::string traj_file_name(std::size_t map_index, std::size_t traj_index);

/// Writes maps/NNNNN.png, trajs/NNNNN/KKK.csv and manifest.json under out_dir.
/// Output is a pure function of the parameters (thread count excluded).
DatasetManifest build_dataset(const DatasetParams& params, const std::filesystem::path& out_dir);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Samples a start/goal pair of distinct free cells whose A* path has at
/// least min_points waypoints. Throws DatasetError after max_attempts misses.
struct DemoQuery {
  GridPose start;
  GridPose goal;
  Trajectory path;
};
DemoQuery sample_demo_query(const OccupancyMap& map, Rng& rng,
                            std::size_t min_points = kMinDemoPoints,
                            std::size_t max_attempts = 1000);

// --- trajectory preprocessing ---------------------------------------------

class InvalidTrajectoryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Resamples to exactly n waypoints along the arc length.
///
/// Corners of the input polyline are kept as waypoints whenever n leaves room
/// for them, and the remaining waypoints are spread over the straight runs in
/// proportion to their length (evenly within each run). The output therefore
/// traces the same polyline: arc length and swept pixels are preserved. When
/// there are more corners than n allows, falls back to uniform arc-length
/// spacing. Endpoints are always preserved exactly.
Trajectory resample_trajectory(const Trajectory& traj, std::size_t n);

struct Denormalized {
  Point2 point;
  bool clamped = false;
};

/// x_n = 2x/(width-1) - 1, likewise for y. A 1-pixel axis maps to 0.
Point2 normalize(Point2 p, int width, int height);
inline Point2 normalize(Point2 p, const OccupancyMap& map) {
  return normalize(p, map.width(), map.height());
}
/// Inverse of normalize; results outside the map are clamped and flagged.
Denormalized denormalize(Point2 p, int width, int height);
inline Denormalized denormalize(Point2 p, const OccupancyMap& map) {
  return denormalize(p, map.width(), map.height());
}

// --- in-memory corpus ------------------------------------------------------

struct TrainingSample {
  std::size_t map_index = 0;
  GridPose start;
  GridPose goal;
  ActionSeq action;  // horizon points in [-1, 1]^2
};

struct TrainingCorpus {
  DatasetManifest manifest;
  std::vector<OccupancyMap> maps;
  std::vector<TrainingSample> samples;
};

TrainingSample make_training_sample(const OccupancyMap& map, std::size_t map_index,
                                    const Trajectory& demo, int horizon);

/// Loads every map and trajectory referenced by the manifest and turns each
/// trajectory into a horizon-length normalized action.
TrainingCorpus load_corpus(const std::filesystem::path& root);

struct ValidationReport {
  std::size_t checked = 0;
  std::size_t feasible = 0;
  std::size_t endpoint_consistent = 0;
  std::vector<std::string> problems;

  bool all_ok() const {
    return checked > 0 && feasible == checked && endpoint_consistent == checked &&
           problems.empty();
  }
};

/// Re-checks every stored trajectory: file present, feasible on its map and
/// endpoints equal to the manifest entry.
ValidationReport validate_dataset(const std::filesystem::path& root);

}  // namespace diffplan
