#include "diffplan/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "diffplan/classic_planner.hpp"
#include "diffplan/feasibility.hpp"
#include "diffplan/map_gen.hpp"
#include "diffplan/map_io.hpp"

namespace diffplan {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string map_file_name(std::size_t map_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "maps/%05zu.png", map_index);
  return buf;
}

std::string traj_file_name(std::size_t map_index, std::size_t traj_index) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "trajs/%05zu/%03zu.csv", map_index, traj_index);
  return buf;
}

DemoQuery sample_demo_query(const OccupancyMap& map, Rng& rng, std::size_t min_points,
                            std::size_t max_attempts) {
  const auto free = map.free_cells();
  if (free.size() >= 2) {
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
      const GridPose s = free[uniform_index(rng, free.size())];
      const GridPose g = free[uniform_index(rng, free.size())];
      if (s == g) continue;
      try {
        Trajectory path = astar(map, s, g);
        if (path.length() >= min_points) return {s, g, std::move(path)};
      } catch (const NoPathError&) {
      }
    }
  }
  throw DatasetError("could not sample a start/goal pair with a path of at least " +
                     std::to_string(min_points) + " waypoints after " +
                     std::to_string(max_attempts) + " attempts");
}

namespace {

struct MapOutput {
  std::vector<TrajectoryEntry> entries;
};

MapOutput build_one_map(const DatasetParams& params, std::size_t map_index,
                        const fs::path& out_dir) {
  const OccupancyMap map = generate_scaled_maze(params.map_size, params.corridor_width,
                                                derive_seed(params.seed, 2 * map_index));
  save_map(map, out_dir / map_file_name(map_index));

  Rng rng(derive_seed(params.seed, 2 * map_index + 1));
  MapOutput out;
  out.entries.reserve(params.trajs_per_map);
  for (std::size_t k = 0; k < params.trajs_per_map; ++k) {
    DemoQuery q;
    try {
      q = sample_demo_query(map, rng);
    } catch (const DatasetError& e) {
      throw DatasetError("map " + std::to_string(map_index) + ": " + e.what());
    }
    const std::string file = traj_file_name(map_index, k);
    save_trajectory_csv(q.path, out_dir / file);
    out.entries.push_back({map_index, k, file, q.start, q.goal, q.path.length()});
  }
  return out;
}

json pose_json(GridPose p) { return json::array({p.x, p.y}); }

GridPose pose_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

}  // namespace

DatasetManifest build_dataset(const DatasetParams& params, const fs::path& out_dir) {
  if (params.n_maps == 0 || params.trajs_per_map == 0) {
    throw std::invalid_argument("build_dataset: n_maps and trajs_per_map must be positive");
  }
  if (params.map_size < 3) throw std::invalid_argument("build_dataset: map_size must be >= 3");
  if (params.horizon < 2) throw std::invalid_argument("build_dataset: horizon must be >= 2");
  fs::create_directories(out_dir / "maps");
  fs::create_directories(out_dir / "trajs");

  std::vector<MapOutput> per_map(params.n_maps);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < params.n_maps; i = next++) {
      try {
        per_map[i] = build_one_map(params, i, out_dir);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = params.n_maps;
      }
    }
  };
  unsigned threads = params.threads ? params.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(params.n_maps)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  DatasetManifest m;
  m.n_maps = params.n_maps;
  m.trajs_per_map = params.trajs_per_map;
  m.map_size = params.map_size;
  m.corridor_width = params.corridor_width;
  m.seed = params.seed;
  m.horizon = params.horizon;
  for (std::size_t i = 0; i < params.n_maps; ++i) {
    m.maps.push_back(map_file_name(i));
    for (auto& e : per_map[i].entries) m.trajectories.push_back(std::move(e));
  }
  write_manifest(m, out_dir / "manifest.json");
  return m;
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  json j;
  j["format_version"] = m.format_version;
  j["n_maps"] = m.n_maps;
  j["trajs_per_map"] = m.trajs_per_map;
  j["map_size"] = m.map_size;
  j["corridor_width"] = m.corridor_width;
  j["seed"] = m.seed;
  j["horizon"] = m.horizon;
  j["maps"] = m.maps;
  json trajs = json::array();
  for (const auto& e : m.trajectories) {
    trajs.push_back({{"map", e.map},
                     {"index", e.index},
                     {"file", e.file},
                     {"start", pose_json(e.start)},
                     {"goal", pose_json(e.goal)},
                     {"length", e.length}});
  }
  j["trajectories"] = std::move(trajs);

  // Single writer; write-then-rename so readers never see a partial manifest.
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << j.dump(1) << '\n';
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
    DatasetManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kDatasetFormatVersion) {
      throw DatasetError("unsupported dataset format_version " +
                         std::to_string(m.format_version));
    }
    m.n_maps = j.at("n_maps").get<std::size_t>();
    m.trajs_per_map = j.at("trajs_per_map").get<std::size_t>();
    m.map_size = j.at("map_size").get<int>();
    m.corridor_width = j.value("corridor_width", 1);
    m.seed = j.at("seed").get<std::uint64_t>();
    m.horizon = j.at("horizon").get<int>();
    m.maps = j.at("maps").get<std::vector<std::string>>();
    for (const auto& t : j.at("trajectories")) {
      m.trajectories.push_back({t.at("map").get<std::size_t>(), t.at("index").get<std::size_t>(),
                                t.at("file").get<std::string>(), pose_from(t.at("start")),
                                pose_from(t.at("goal")), t.at("length").get<std::size_t>()});
    }
    if (m.maps.size() != m.n_maps || m.trajectories.size() != m.n_maps * m.trajs_per_map) {
      throw DatasetError("manifest counts do not match its file lists");
    }
    if (m.horizon < 2) throw DatasetError("manifest horizon must be >= 2");
    return m;
  } catch (const json::exception& e) {
    throw DatasetError("malformed manifest " + path.string() + ": " + e.what());
  }
}

// --- resampling ---------------------------------------------------------------

namespace {

Point2 lerp(Point2 a, Point2 b, double t) {
  return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
}

bool is_corner(Point2 prev, Point2 here, Point2 next) {
  const double ux = here.x - prev.x, uy = here.y - prev.y;
  const double vx = next.x - here.x, vy = next.y - here.y;
  const double cross = ux * vy - uy * vx;
  const double dot = ux * vx + uy * vy;
  const double scale = std::hypot(ux, uy) * std::hypot(vx, vy);
  return std::abs(cross) > 1e-9 * scale || dot < 0.0;
}

Trajectory resample_uniform(const std::vector<Point2>& pts, std::size_t n) {
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + distance(pts[i - 1], pts[i]);
  const double total = cum.back();
  Trajectory out;
  out.points.reserve(n);
  out.points.push_back(pts.front());
  std::size_t seg = 1;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double s = total * static_cast<double>(i) / static_cast<double>(n - 1);
    while (seg + 1 < pts.size() && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
    out.points.push_back(lerp(pts[seg - 1], pts[seg], std::clamp(t, 0.0, 1.0)));
  }
  out.points.push_back(pts.back());
  return out;
}

}  // namespace

Trajectory resample_trajectory(const Trajectory& traj, std::size_t n) {
  if (traj.length() < 2) {
    throw InvalidTrajectoryError("resample_trajectory needs at least 2 waypoints, got " +
                                 std::to_string(traj.length()));
  }
  if (n < 2) throw InvalidTrajectoryError("resample_trajectory target must be >= 2");

  std::vector<Point2> pts;
  pts.reserve(traj.length());
  for (const auto& p : traj.points) {
    if (pts.empty() || !(p == pts.back())) pts.push_back(p);
  }
  if (pts.size() == 1) {
    Trajectory out;
    out.points.assign(n, pts.front());
    out.points.back() = traj.back();
    return out;
  }

  std::vector<Point2> vertices{pts.front()};
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    if (is_corner(pts[i - 1], pts[i], pts[i + 1])) vertices.push_back(pts[i]);
  }
  vertices.push_back(pts.back());
  if (vertices.size() > n) return resample_uniform(pts, n);

  // Largest-remainder split of the free waypoints over the straight runs.
  const std::size_t runs = vertices.size() - 1;
  const std::size_t spare = n - vertices.size();
  std::vector<double> lengths(runs);
  double total = 0.0;
  for (std::size_t j = 0; j < runs; ++j) {
    lengths[j] = distance(vertices[j], vertices[j + 1]);
    total += lengths[j];
  }
  std::vector<std::size_t> quota(runs);
  std::vector<std::pair<double, std::size_t>> remainders(runs);
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < runs; ++j) {
    const double exact = static_cast<double>(spare) * lengths[j] / total;
    quota[j] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[j];
    remainders[j] = {exact - static_cast<double>(quota[j]), j};
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < spare; ++r, ++assigned) ++quota[remainders[r].second];

  Trajectory out;
  out.points.reserve(n);
  for (std::size_t j = 0; j < runs; ++j) {
    out.points.push_back(vertices[j]);
    for (std::size_t t = 1; t <= quota[j]; ++t) {
      out.points.push_back(lerp(vertices[j], vertices[j + 1],
                                static_cast<double>(t) / static_cast<double>(quota[j] + 1)));
    }
  }
  out.points.push_back(vertices.back());
  return out;
}

Point2 normalize(Point2 p, int width, int height) {
  auto axis = [](double v, int extent) {
    return extent > 1 ? 2.0 * v / static_cast<double>(extent - 1) - 1.0 : 0.0;
  };
  return {axis(p.x, width), axis(p.y, height)};
}

Denormalized denormalize(Point2 p, int width, int height) {
  Denormalized out;
  auto axis = [&out](double v, int extent) {
    double px = extent > 1 ? (v + 1.0) * static_cast<double>(extent - 1) / 2.0 : 0.0;
    const double hi = static_cast<double>(extent - 1);
    if (!(px >= 0.0)) {  // also catches NaN
      px = 0.0;
      out.clamped = true;
    } else if (px > hi) {
      px = hi;
      out.clamped = true;
    }
    return px;
  };
  out.point = {axis(p.x, width), axis(p.y, height)};
  return out;
}

// --- corpus -------------------------------------------------------------------

TrainingSample make_training_sample(const OccupancyMap& map, std::size_t map_index,
                                    const Trajectory& demo, int horizon) {
  if (demo.length() < 2) throw InvalidTrajectoryError("training demo needs >= 2 waypoints");
  const Trajectory fixed = resample_trajectory(demo, static_cast<std::size_t>(horizon));
  TrainingSample s;
  s.map_index = map_index;
  s.start = {static_cast<int>(std::lround(demo.front().x)), static_cast<int>(std::lround(demo.front().y))};
  s.goal = {static_cast<int>(std::lround(demo.back().x)), static_cast<int>(std::lround(demo.back().y))};
  s.action.reserve(fixed.length());
  for (const auto& p : fixed.points) s.action.push_back(normalize(p, map));
  return s;
}

TrainingCorpus load_corpus(const fs::path& root) {
  TrainingCorpus c;
  c.manifest = read_manifest(root / "manifest.json");
  c.maps.reserve(c.manifest.maps.size());
  for (const auto& rel : c.manifest.maps) c.maps.push_back(load_map(root / rel));
  c.samples.reserve(c.manifest.trajectories.size());
  for (const auto& e : c.manifest.trajectories) {
    if (e.map >= c.maps.size()) throw DatasetError("trajectory references missing map " + e.file);
    const Trajectory demo = load_trajectory_csv(root / e.file);
    c.samples.push_back(make_training_sample(c.maps[e.map], e.map, demo, c.manifest.horizon));
  }
  return c;
}

ValidationReport validate_dataset(const fs::path& root) {
  ValidationReport r;
  const DatasetManifest m = read_manifest(root / "manifest.json");
  std::vector<OccupancyMap> maps;
  for (const auto& rel : m.maps) {
    if (!fs::exists(root / rel)) {
      r.problems.push_back("missing map file " + rel);
      maps.emplace_back();
      continue;
    }
    maps.push_back(load_map(root / rel));
  }
  for (const auto& e : m.trajectories) {
    ++r.checked;
    if (e.map >= maps.size() || maps[e.map].empty()) {
      r.problems.push_back(e.file + ": map unavailable");
      continue;
    }
    if (!fs::exists(root / e.file)) {
      r.problems.push_back("missing trajectory file " + e.file);
      continue;
    }
    const Trajectory t = load_trajectory_csv(root / e.file);
    if (!t.empty() && t.front() == to_point(e.start) && t.back() == to_point(e.goal) &&
        t.length() == e.length) {
      ++r.endpoint_consistent;
    } else {
      r.problems.push_back(e.file + ": endpoints or length differ from manifest");
    }
    const auto rep = check_feasible(maps[e.map], t, e.start, e.goal);
    if (rep.success) {
      ++r.feasible;
    } else {
      r.problems.push_back(e.file + ": infeasible (" + std::string(to_string(rep.failure_reason)) + ")");
    }
  }
  return r;
}

}  // namespace diffplan
