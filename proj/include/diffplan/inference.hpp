#pragma once

#include <functional>
#include <optional>

#include "diffplan/diffusion.hpp"
#include "diffplan/evaluation.hpp"
#include "diffplan/noise_model.hpp"
#include "diffplan/occupancy_map.hpp"
#include "diffplan/trajectory.hpp"

namespace diffplan {

constexpr int kMinPathLen = 12;
constexpr int kMaxPathLen = 512;
constexpr double kDefaultRho = 1.2;

struct PlanQuery {
  OccupancyMap map;
  GridPose start;
  GridPose goal;
  int K = 1000;
  /// Waypoint count; estimated from the geodesic distance when absent.
  std::optional<int> path_l;
  double rho = kDefaultRho;
  std::uint64_t seed = 0;
  /// Clip the predicted clean sample to the normalized map square each step.
  bool clip_sample = true;
};

struct PlanResult {
  Trajectory trajectory;  // original map pixel coordinates
  int path_l = 0;
  int K = 0;
  double wall_time_s = 0.0;
  int denoise_iterations = 0;
  /// Interior waypoints that fell outside the map and were clamped.
  std::size_t clamp_events = 0;
};

/// round(rho * geodesic(start, goal)), clamped to [12, 512] and rounded up to
/// a multiple of 4. Throws NoPathError when goal is unreachable.
int estimate_path_len(const OccupancyMap& map, GridPose start, GridPose goal, double rho = kDefaultRho);

/// Called after every reverse step (post inpainting) with the new iteration
/// index k-1 and the current normalized sample.
using ChainObserver = std::function<void(int k, const ActionSeq& sample)>;

/// Reverse-diffusion planner over a shared, immutable noise predictor.
class DiffusionPlanner {
 public:
  /// The schedule length must match the one the model was trained with.
  DiffusionPlanner(NoisePredictor model, int schedule_steps);
  explicit DiffusionPlanner(const LoadedCheckpoint& checkpoint);

  /// Draws a (path_l, 2) standard-normal sample, inpaints start/goal, runs K
  /// denoise steps re-inpainting after each, and maps the result back to the
  /// query map's pixel coordinates. Exactly K network evaluations.
  PlanResult plan(const PlanQuery& query, const ChainObserver& observer = {}) const;

  const NoiseSchedule& schedule() const { return sched_; }
  const ModelConfig& config() const { return model_->config(); }
  NoisePredictor& model() { return model_; }

 private:
  NoisePredictor model_;
  NoiseSchedule sched_;
};

/// Adapters for the evaluation harness. A fixed path_l overrides the
/// geodesic estimate.
EvalPlanner diffusion_eval_planner(const DiffusionPlanner& planner, std::optional<int> path_l = {},
                                   double rho = kDefaultRho, bool clip_sample = true);
BenchPlanner diffusion_bench_planner(const DiffusionPlanner& planner, std::optional<int> path_l = {},
                                     std::uint64_t seed = 0, std::string name = "diffusion");

}  // namespace diffplan
