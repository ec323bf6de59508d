// diffplan: command-line front end for dataset generation, training, planning,
// evaluation and timing.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "diffplan/classic_planner.hpp"
#include "diffplan/dataset.hpp"
#include "diffplan/evaluation.hpp"
#include "diffplan/inference.hpp"
#include "diffplan/map_gen.hpp"
#include "diffplan/map_io.hpp"
#include "diffplan/render.hpp"
#include "diffplan/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace diffplan;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string config;
  std::string out;
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return json::parse(in);
}

void write_json(const json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_text(const std::string& text, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

GridPose parse_pose(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw CLI::ValidationError("expected X,Y but got '" + s + "'");
  try {
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("expected integer X,Y but got '" + s + "'");
  }
}

/// PNG files named directly, found in a directory, or listed by a dataset
/// manifest under that directory.
std::vector<NamedMap> collect_maps(const std::vector<std::string>& inputs, std::size_t limit) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      if (fs::exists(p / "manifest.json")) {
        for (const auto& m : read_manifest(p / "manifest.json").maps) files.push_back(p / m);
        continue;
      }
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().extension() == ".png") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  if (limit > 0 && files.size() > limit) files.resize(limit);
  if (files.empty()) throw std::runtime_error("no maps found");
  std::vector<NamedMap> maps;
  for (const auto& f : files) maps.push_back({f.stem().string(), import_map(f)});
  return maps;
}

// --- gen-data -------------------------------------------------------------------

struct GenDataArgs {
  DatasetParams params;
  bool validate = false;
};

void run_gen_data(const Globals& g, GenDataArgs a) {
  if (!g.config.empty()) {
    const json j = read_json(g.config);
    a.params.n_maps = j.value("n_maps", a.params.n_maps);
    a.params.trajs_per_map = j.value("trajs_per_map", a.params.trajs_per_map);
    a.params.map_size = j.value("map_size", a.params.map_size);
    a.params.corridor_width = j.value("corridor_width", a.params.corridor_width);
    a.params.horizon = j.value("horizon", a.params.horizon);
    a.params.seed = j.value("seed", a.params.seed);
  }
  if (g.seed_set) a.params.seed = g.seed;
  const fs::path out = g.out.empty() ? fs::path("dataset") : fs::path(g.out);
  const auto manifest = build_dataset(a.params, out);
  std::cout << "wrote " << manifest.maps.size() << " maps and " << manifest.trajectories.size()
            << " trajectories to " << out.string() << '\n';
  if (a.validate) {
    const auto report = validate_dataset(out);
    std::cout << "validated " << report.checked << ": " << report.feasible << " feasible, "
              << report.endpoint_consistent << " endpoint-consistent\n";
    for (const auto& p : report.problems) std::cout << "  " << p << '\n';
    if (!report.all_ok()) throw DatasetError("dataset validation failed");
  }
}

// --- train ----------------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::optional<std::int64_t> steps;
  std::optional<int> batch;
  std::optional<double> lr;
};

void run_train(const Globals& g, const TrainArgs& a) {
  TrainConfig cfg;
  if (!g.config.empty()) cfg = read_json(g.config).get<TrainConfig>();
  if (!a.dataset.empty()) cfg.dataset = a.dataset;
  if (!g.out.empty()) cfg.out_dir = g.out;
  if (g.seed_set) cfg.seed = g.seed;
  if (a.steps) cfg.steps = *a.steps;
  if (a.batch) cfg.batch_size = *a.batch;
  if (a.lr) cfg.learning_rate = *a.lr;
  if (cfg.dataset.empty()) throw std::runtime_error("train needs --dataset or a config with \"dataset\"");
  const auto result = train(cfg, [](const LossRecord& r) {
    std::printf("step %lld  loss %.6f  %.1fs\n", static_cast<long long>(r.step), r.loss, r.wall_time_s);
    std::fflush(stdout);
  });
  std::cout << "checkpoint: " << result.checkpoint.string() << '\n';
}

// --- plan -----------------------------------------------------------------------

struct PlanArgs {
  std::string checkpoint;
  std::string map;
  std::string start;
  std::string goal;
  int k = 1000;
  std::optional<int> path_l;
  double rho = kDefaultRho;
  bool no_clip = false;
  std::string render;
  bool astar = false;
};

void run_plan(const Globals& g, const PlanArgs& a) {
  const OccupancyMap map = import_map(a.map);
  const GridPose start = parse_pose(a.start);
  const GridPose goal = parse_pose(a.goal);
  const fs::path out = g.out.empty() ? fs::path("trajectory.csv") : fs::path(g.out);

  Trajectory traj;
  json sidecar{{"seed", g.seed}};
  if (a.astar) {
    const auto r = astar_search(map, start, goal);
    traj = r.path;
    sidecar["planner"] = "astar";
    sidecar["expansions"] = r.expansions;
    sidecar["cost"] = r.cost.value();
  } else {
    if (a.checkpoint.empty()) throw std::runtime_error("plan needs --checkpoint (or --astar)");
    const DiffusionPlanner planner(load_checkpoint(a.checkpoint));
    PlanQuery q{map, start, goal, a.k, a.path_l, a.rho, g.seed, !a.no_clip};
    const PlanResult r = planner.plan(q);
    traj = r.trajectory;
    sidecar["planner"] = "diffusion";
    sidecar["path_l"] = r.path_l;
    sidecar["K"] = r.K;
    sidecar["wall_time_s"] = r.wall_time_s;
    sidecar["clamp_events"] = r.clamp_events;
  }
  const FeasibilityReport report = check_feasible(map, traj, start, goal);
  sidecar["feasible"] = report.success;
  sidecar["failure_reason"] = std::string(to_string(report.failure_reason));
  if (report.first_violation) {
    sidecar["first_violation"] = {report.first_violation->x, report.first_violation->y};
  }

  save_trajectory_csv(traj, out);
  fs::path side = out;
  side.replace_extension(".json");
  write_json(sidecar, side);
  if (!a.render.empty()) save_overlay(map, {{traj}}, start, goal, a.render);
  std::cout << sidecar.dump() << '\n';
}

// --- eval -----------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::vector<std::string> maps;
  std::size_t max_maps = 0;
  std::size_t queries = 10;
  int repeats = 3;
  std::optional<int> path_l;
  double rho = kDefaultRho;
  bool no_clip = false;
  double bin_width = 20.0;
  double min_len = 0.0;
  double max_len = std::numeric_limits<double>::infinity();
};

void run_eval(const Globals& g, const EvalArgs& a) {
  const auto maps = collect_maps(a.maps, a.max_maps);
  const DiffusionPlanner planner(load_checkpoint(a.checkpoint));
  const auto queries = sample_eval_queries(maps, a.queries, g.seed, {a.min_len, a.max_len});
  const SuccessReport report =
      evaluate_queries(diffusion_eval_planner(planner, a.path_l, a.rho, !a.no_clip), maps, queries, a.repeats, g.seed,
                       a.bin_width);
  const fs::path out = g.out.empty() ? fs::path("eval") : fs::path(g.out);
  write_json(report.to_json(), out / "report.json");
  write_text(report.to_markdown(), out / "report.md");

  Series curve{"success", {}, {}};
  for (const auto& b : report.bins) {
    curve.x.push_back(0.5 * (b.lo + b.hi));
    curve.y.push_back(b.rate());
  }
  write_series_csv({curve}, out / "success_vs_length.csv");
  save_line_plot({"Success rate by geodesic length", "geodesic length (px)", "% success"}, {curve},
                 out / "success_vs_length.png");
  std::cout << report.to_markdown();
}

// --- bench ----------------------------------------------------------------------

struct BenchArgs {
  std::string checkpoint;
  std::vector<std::string> maps;
  std::vector<int> sizes{100, 300, 600, 760};
  std::size_t trials = 10;
  std::optional<int> path_l;
};

void run_bench(const Globals& g, const BenchArgs& a) {
  std::vector<NamedMap> maps;
  if (!a.maps.empty()) {
    maps = collect_maps(a.maps, 0);
  } else {
    for (int size : a.sizes) {
      maps.push_back({"maze" + std::to_string(size),
                      generate_maze(MazeSpec::for_size(size, derive_seed(g.seed, static_cast<std::uint64_t>(size))))});
    }
  }
  std::sort(maps.begin(), maps.end(), [](const NamedMap& x, const NamedMap& y) {
    return std::max(x.map.width(), x.map.height()) < std::max(y.map.width(), y.map.height());
  });

  std::vector<BenchPlanner> planners{astar_bench_planner()};
  std::optional<DiffusionPlanner> diffusion;
  if (!a.checkpoint.empty()) {
    diffusion.emplace(load_checkpoint(a.checkpoint));
    planners.push_back(diffusion_bench_planner(*diffusion, a.path_l, g.seed));
  }
  const auto rows = bench_timing(planners, maps, a.trials, g.seed);

  const fs::path out = g.out.empty() ? fs::path("bench") : fs::path(g.out);
  write_bench_csv(rows, out / "bench.csv");
  write_text(render_bench_table(rows), out / "bench.md");

  std::vector<Series> series;
  const Rgb palette[] = {{200, 60, 40}, {30, 90, 200}, {40, 160, 60}};
  for (const auto& p : planners) {
    Series s{p.name, {}, {}, palette[series.size() % 3]};
    for (const auto& r : rows) {
      if (r.planner == p.name) {
        s.x.push_back(r.map_size);
        s.y.push_back(r.mean_s);
      }
    }
    series.push_back(std::move(s));
  }
  write_series_csv(series, out / "size_vs_time.csv");
  save_line_plot({"Mean generation time by map size", "map side (px)", "seconds", true}, series,
                 out / "size_vs_time.png");
  std::cout << render_bench_table(rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion path planning on occupancy grids"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output file or directory");
  for (auto* opt : app.get_options()) opt->configurable(false);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a maze dataset with A* demonstrations");
  gen_cmd->add_option("--n-maps", gen.params.n_maps)->capture_default_str();
  gen_cmd->add_option("--trajs-per-map", gen.params.trajs_per_map)->capture_default_str();
  gen_cmd->add_option("--map-size", gen.params.map_size)->capture_default_str();
  gen_cmd->add_option("--corridor-width", gen.params.corridor_width, "Maze passage width in pixels")
      ->capture_default_str();
  gen_cmd->add_option("--horizon", gen.params.horizon)->capture_default_str();
  gen_cmd->add_option("--threads", gen.params.threads, "0 = all cores")->capture_default_str();
  gen_cmd->add_flag("--validate", gen.validate, "Re-check every stored trajectory afterwards");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the noise predictor");
  train_cmd->add_option("--dataset", tr.dataset, "Dataset root");
  train_cmd->add_option("--steps", tr.steps);
  train_cmd->add_option("--batch", tr.batch);
  train_cmd->add_option("--lr", tr.lr);

  PlanArgs pl;
  auto* plan_cmd = app.add_subcommand("plan", "Plan one trajectory");
  plan_cmd->add_option("--checkpoint", pl.checkpoint)->check(CLI::ExistingFile);
  plan_cmd->add_option("--map", pl.map)->required()->check(CLI::ExistingFile);
  plan_cmd->add_option("--start", pl.start, "X,Y")->required();
  plan_cmd->add_option("--goal", pl.goal, "X,Y")->required();
  plan_cmd->add_option("--k", pl.k, "Diffusion iterations")->capture_default_str();
  plan_cmd->add_option("--path-l", pl.path_l, "Waypoint count (default: estimated)");
  plan_cmd->add_option("--rho", pl.rho, "Path length inflation")->capture_default_str();
  plan_cmd->add_flag("--no-clip", pl.no_clip, "Do not clip the predicted clean sample");
  plan_cmd->add_option("--render", pl.render, "Write a PNG overlay here");
  plan_cmd->add_flag("--astar", pl.astar, "Use the A* baseline instead");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Success rate on random queries");
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--maps", ev.maps, "PNG files, directories or dataset roots")->required();
  eval_cmd->add_option("--max-maps", ev.max_maps, "0 = all")->capture_default_str();
  eval_cmd->add_option("--queries", ev.queries, "Queries per map")->capture_default_str();
  eval_cmd->add_option("--repeats", ev.repeats)->capture_default_str();
  eval_cmd->add_option("--path-l", ev.path_l);
  eval_cmd->add_option("--rho", ev.rho)->capture_default_str();
  eval_cmd->add_flag("--no-clip", ev.no_clip, "Do not clip the predicted clean sample");
  eval_cmd->add_option("--bin-width", ev.bin_width)->capture_default_str();
  eval_cmd->add_option("--min-len", ev.min_len, "Minimum query geodesic length");
  eval_cmd->add_option("--max-len", ev.max_len, "Maximum query geodesic length");

  BenchArgs be;
  auto* bench_cmd = app.add_subcommand("bench", "Time planners across map sizes");
  bench_cmd->add_option("--checkpoint", be.checkpoint, "Include the diffusion planner")
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--maps", be.maps, "PNG files or directories (default: generated mazes)");
  bench_cmd->add_option("--sizes", be.sizes, "Generated maze sides")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--trials", be.trials)->capture_default_str();
  bench_cmd->add_option("--path-l", be.path_l, "Fixed waypoint count for the diffusion planner");

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  try {
    if (*gen_cmd) run_gen_data(g, gen);
    if (*train_cmd) run_train(g, tr);
    if (*plan_cmd) run_plan(g, pl);
    if (*eval_cmd) run_eval(g, ev);
    if (*bench_cmd) run_bench(g, be);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
