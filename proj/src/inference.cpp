#include "diffplan/inference.hpp"

#include <chrono>
#include <cmath>

#include "diffplan/classic_planner.hpp"
#include "diffplan/dataset.hpp"
#include "diffplan/random.hpp"

namespace diffplan {

namespace {

int round_up(int v, int multiple) { return (v + multiple - 1) / multiple * multiple; }

void require_endpoint(const OccupancyMap& map, GridPose p, const char* what) {
  if (!map.is_free(p)) {
    throw InvalidQueryError(std::string(what) + " " + to_string(p) + " is not a free cell");
  }
}

torch::Tensor to_tensor(const ActionSeq& a) {
  auto t = torch::empty({1, static_cast<std::int64_t>(a.size()), 2}, torch::kFloat32);
  auto acc = t.accessor<float, 3>();
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc[0][static_cast<std::int64_t>(i)][0] = static_cast<float>(a[i].x);
    acc[0][static_cast<std::int64_t>(i)][1] = static_cast<float>(a[i].y);
  }
  return t;
}

ActionSeq from_tensor(const torch::Tensor& t) {
  const auto c = t.to(torch::kFloat64).contiguous();
  const auto acc = c.accessor<double, 3>();
  ActionSeq a(static_cast<std::size_t>(c.size(1)));
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = {acc[0][static_cast<std::int64_t>(i)][0], acc[0][static_cast<std::int64_t>(i)][1]};
  }
  return a;
}

}  // namespace

int estimate_path_len(const OccupancyMap& map, GridPose start, GridPose goal, double rho) {
  if (!(rho >= 1.0)) throw std::invalid_argument("rho must be >= 1");
  require_endpoint(map, start, "start");
  require_endpoint(map, goal, "goal");
  const auto cost = geodesic_field(map, start).exact(goal);
  if (!cost) throw NoPathError("goal " + to_string(goal) + " is unreachable from " + to_string(start));
  const auto raw = static_cast<long long>(std::llround(rho * cost->value()));
  const int clamped = static_cast<int>(std::clamp<long long>(raw, kMinPathLen, kMaxPathLen));
  return round_up(clamped, 4);
}

DiffusionPlanner::DiffusionPlanner(NoisePredictor model, int schedule_steps)
    : model_(std::move(model)), sched_(make_cosine_schedule(schedule_steps)) {
  model_->eval();
}

DiffusionPlanner::DiffusionPlanner(const LoadedCheckpoint& checkpoint)
    : DiffusionPlanner(checkpoint.model, checkpoint.info.schedule_steps) {}

PlanResult DiffusionPlanner::plan(const PlanQuery& query, const ChainObserver& observer) const {
  const auto t0 = std::chrono::steady_clock::now();
  if (query.K != sched_.K) {
    throw CheckpointError("query asks for K = " + std::to_string(query.K) +
                          " but the model was trained with K = " + std::to_string(sched_.K));
  }
  const OccupancyMap& map = query.map;
  require_endpoint(map, query.start, "start");
  require_endpoint(map, query.goal, "goal");

  const int multiple = model_->config().length_multiple();
  int path_l = query.path_l ? std::max(*query.path_l, 2)
                            : estimate_path_len(map, query.start, query.goal, query.rho);
  path_l = round_up(std::max(path_l, multiple), multiple);

  torch::NoGradGuard no_grad;
  NoisePredictor model = model_;
  const Point2 start_n = normalize(to_point(query.start), map);
  const Point2 goal_n = normalize(to_point(query.goal), map);
  const auto image = map_to_tensor(map, model->config().input_resolution);
  const auto endpoints = torch::tensor({static_cast<float>(start_n.x), static_cast<float>(start_n.y),
                                        static_cast<float>(goal_n.x), static_cast<float>(goal_n.y)})
                             .reshape({1, 4});
  const auto obs = model->encode(image, endpoints);

  Rng rng(query.seed);
  std::normal_distribution<double> normal;
  auto draw = [&](ActionSeq& a) {
    for (auto& p : a) p = {normal(rng), normal(rng)};
  };
  NoisyAction sample{ActionSeq(static_cast<std::size_t>(path_l)), sched_.K};
  draw(sample.values);
  apply_inpainting(sample.values, start_n, goal_n);

  PlanResult result;
  ActionSeq z(sample.values.size());
  for (int k = sched_.K; k >= 1; --k) {
    const auto step = torch::full({1}, k, torch::kInt64);
    ActionSeq eps_hat = from_tensor(model->predict(to_tensor(sample.values), step, obs));
    if (query.clip_sample) eps_hat = clip_predicted_noise(eps_hat, sample, sched_);
    ++result.denoise_iterations;
    if (k > 1) draw(z);
    sample = denoise_step(eps_hat, sample, sched_, z);
    apply_inpainting(sample.values, start_n, goal_n);
    if (observer) observer(sample.k, sample.values);
  }

  result.trajectory.points.reserve(sample.values.size());
  for (const auto& p : sample.values) {
    const Denormalized d = denormalize(p, map);
    if (d.clamped) ++result.clamp_events;
    result.trajectory.points.push_back(d.point);
  }
  // Inpainted endpoints are exact in pixel space, not just up to rounding.
  result.trajectory.points.front() = to_point(query.start);
  result.trajectory.points.back() = to_point(query.goal);
  result.path_l = path_l;
  result.K = sched_.K;
  result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

EvalPlanner diffusion_eval_planner(const DiffusionPlanner& planner, std::optional<int> path_l, double rho,
                                   bool clip_sample) {
  return [&planner, path_l, rho, clip_sample](const OccupancyMap& map, GridPose s, GridPose g,
                                              std::uint64_t seed) {
    PlanQuery q{map, s, g, planner.schedule().K, path_l, rho, seed, clip_sample};
    return planner.plan(q).trajectory;
  };
}

BenchPlanner diffusion_bench_planner(const DiffusionPlanner& planner, std::optional<int> path_l,
                                     std::uint64_t seed, std::string name) {
  return {std::move(name), [&planner, path_l, seed](const OccupancyMap& map, GridPose s, GridPose g) {
            PlanQuery q{map, s, g, planner.schedule().K, path_l, kDefaultRho, seed};
            PlanResult r = planner.plan(q);
            return BenchTrial{std::move(r.trajectory), static_cast<std::uint64_t>(r.denoise_iterations)};
          }};
}

}  // namespace diffplan
