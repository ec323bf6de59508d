#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffplan/feasibility.hpp"
#include "diffplan/occupancy_map.hpp"
#include "diffplan/random.hpp"
#include "diffplan/trajectory.hpp"

namespace diffplan {

/// Percentage of successes; 0 when total is 0.
double success_rate(std::size_t successes, std::size_t total);

struct NamedMap {
  std::string id;
  OccupancyMap map;
};

struct EvalQuery {
  std::size_t map = 0;
  GridPose start;
  GridPose goal;
  double geodesic = 0.0;
};

/// Optional geodesic-length window for query sampling.
struct LengthWindow {
  double min = 0.0;
  double max = std::numeric_limits<double>::infinity();
};

/// Random distinct, mutually reachable free start/goal pairs, deterministic in
/// (seed, map index). Throws std::runtime_error if a map cannot supply a pair
/// inside the window after max_attempts draws.
std::vector<EvalQuery> sample_eval_queries(const std::vector<NamedMap>& maps, std::size_t per_map,
                                           std::uint64_t seed, LengthWindow window = {},
                                           std::size_t max_attempts = 20000);

/// A planner under evaluation. `seed` varies across repeats.
using EvalPlanner =
    std::function<Trajectory(const OccupancyMap&, GridPose start, GridPose goal, std::uint64_t seed)>;

struct EvalOutcome {
  EvalQuery query;
  int repeat = 0;
  FeasibilityReport report;
  std::string error;  // planner exception text, counted as failure
};

struct LengthBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t total = 0;
  std::size_t successes = 0;
  double rate() const { return success_rate(successes, total); }
};

struct MapRow {
  std::string id;
  std::size_t total = 0;
  std::size_t successes = 0;
  double rate() const { return success_rate(successes, total); }
};

struct SuccessReport {
  std::vector<MapRow> per_map;
  std::vector<LengthBin> bins;
  std::vector<EvalOutcome> outcomes;
  std::size_t total = 0;
  std::size_t successes = 0;
  double rate() const { return success_rate(successes, total); }

  nlohmann::json to_json() const;
  std::string to_markdown() const;
};

/// Fixed-width histogram of successes over query geodesic length.
std::vector<LengthBin> bin_by_length(const std::vector<EvalOutcome>& outcomes, double bin_width);

/// Runs every query `repeats` times; planner exceptions count as failures.
SuccessReport evaluate_queries(const EvalPlanner& planner, const std::vector<NamedMap>& maps,
                               const std::vector<EvalQuery>& queries, int repeats,
                               std::uint64_t seed, double bin_width = 20.0);

/// 10 random queries per map, 3 repeats each by default.
SuccessReport eval_success_rate(const EvalPlanner& planner, const std::vector<NamedMap>& maps,
                                std::size_t queries_per_map = 10, int repeats = 3,
                                std::uint64_t seed = 0, double bin_width = 20.0);

// --- timing benchmark ---------------------------------------------------------------

struct BenchTrial {
  Trajectory trajectory;
  /// Planner-specific work count: node expansions for A*, network
  /// evaluations for the diffusion planner.
  std::uint64_t work = 0;
};

struct BenchPlanner {
  std::string name;
  std::function<BenchTrial(const OccupancyMap&, GridPose start, GridPose goal)> plan;
};

struct BenchRow {
  std::string map_id;
  int map_size = 0;
  std::string planner;
  double mean_s = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double mean_work = 0.0;
};

/// Times each planner on the same `trials` random queries per map (shared
/// seed). Only the plan call is timed; failures are excluded from the mean
/// and counted in the row. Trials run serially.
std::vector<BenchRow> bench_timing(const std::vector<BenchPlanner>& planners,
                                   const std::vector<NamedMap>& maps, std::size_t trials = 10,
                                   std::uint64_t seed = 0);

/// Columns map,size,planner,mean_s,trials,failures.
void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path);

/// Maps as rows, planners as columns, mean seconds in cells.
std::string render_bench_table(const std::vector<BenchRow>& rows);

BenchPlanner astar_bench_planner();

}  // namespace diffplan
