#include "diffplan/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "diffplan/classic_planner.hpp"

namespace diffplan {

using json = nlohmann::json;

double success_rate(std::size_t successes, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(successes) / static_cast<double>(total);
}

std::vector<EvalQuery> sample_eval_queries(const std::vector<NamedMap>& maps, std::size_t per_map,
                                           std::uint64_t seed, LengthWindow window,
                                           std::size_t max_attempts) {
  std::vector<EvalQuery> out;
  for (std::size_t m = 0; m < maps.size(); ++m) {
    const OccupancyMap& map = maps[m].map;
    const auto free = map.free_cells();
    Rng rng(derive_seed(seed, m));
    std::size_t found = 0;
    std::size_t attempts = 0;
    while (found < per_map) {
      if (free.size() < 2 || attempts++ >= max_attempts) {
        throw std::runtime_error("map " + maps[m].id + ": cannot sample " + std::to_string(per_map) +
                                 " start/goal pairs in the requested length window");
      }
      const GridPose s = free[uniform_index(rng, free.size())];
      const GridPose g = free[uniform_index(rng, free.size())];
      if (s == g) continue;
      const auto cost = dijkstra_cost(map, s, g);
      if (!cost) continue;
      const double len = cost->value();
      if (len < window.min || len > window.max) continue;
      out.push_back({m, s, g, len});
      ++found;
    }
  }
  return out;
}

std::vector<LengthBin> bin_by_length(const std::vector<EvalOutcome>& outcomes, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin_width must be positive");
  std::map<long, LengthBin> bins;
  for (const auto& o : outcomes) {
    const long b = static_cast<long>(std::floor(o.query.geodesic / bin_width));
    auto& bin = bins[b];
    bin.lo = static_cast<double>(b) * bin_width;
    bin.hi = bin.lo + bin_width;
    ++bin.total;
    if (o.report.success) ++bin.successes;
  }
  std::vector<LengthBin> out;
  for (auto& [_, bin] : bins) out.push_back(bin);
  return out;
}

SuccessReport evaluate_queries(const EvalPlanner& planner, const std::vector<NamedMap>& maps,
                               const std::vector<EvalQuery>& queries, int repeats,
                               std::uint64_t seed, double bin_width) {
  SuccessReport report;
  report.per_map.resize(maps.size());
  for (std::size_t m = 0; m < maps.size(); ++m) report.per_map[m].id = maps[m].id;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const EvalQuery& query = queries[q];
    const OccupancyMap& map = maps.at(query.map).map;
    for (int r = 0; r < repeats; ++r) {
      EvalOutcome o{query, r, {}, {}};
      try {
        const Trajectory t = planner(map, query.start, query.goal,
                                     derive_seed(seed, q * 1009 + static_cast<std::size_t>(r)));
        o.report = check_feasible(map, t, query.start, query.goal);
      } catch (const std::exception& e) {
        o.error = e.what();
      }
      auto& row = report.per_map[query.map];
      ++row.total;
      ++report.total;
      if (o.report.success) {
        ++row.successes;
        ++report.successes;
      }
      report.outcomes.push_back(std::move(o));
    }
  }
  report.bins = bin_by_length(report.outcomes, bin_width);
  return report;
}

SuccessReport eval_success_rate(const EvalPlanner& planner, const std::vector<NamedMap>& maps,
                                std::size_t queries_per_map, int repeats, std::uint64_t seed,
                                double bin_width) {
  const auto queries = sample_eval_queries(maps, queries_per_map, seed);
  return evaluate_queries(planner, maps, queries, repeats, seed, bin_width);
}

json SuccessReport::to_json() const {
  json rows = json::array();
  for (const auto& r : per_map) {
    rows.push_back({{"map", r.id}, {"total", r.total}, {"successes", r.successes}, {"rate", r.rate()}});
  }
  json binned = json::array();
  for (const auto& b : bins) {
    binned.push_back({{"lo", b.lo}, {"hi", b.hi}, {"total", b.total}, {"successes", b.successes},
                      {"rate", b.rate()}});
  }
  std::map<std::string, std::size_t> reasons;
  for (const auto& o : outcomes) {
    ++reasons[o.error.empty() ? std::string(to_string(o.report.failure_reason)) : "PLANNER_ERROR"];
  }
  return json{{"per_map", rows},
              {"total", total},
              {"successes", successes},
              {"rate", rate()},
              {"length_bins", binned},
              {"outcomes_by_reason", reasons}};
}

std::string SuccessReport::to_markdown() const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(1);
  out << "| map | runs | successes | %sr |\n|---|---:|---:|---:|\n";
  for (const auto& r : per_map) {
    out << "| " << r.id << " | " << r.total << " | " << r.successes << " | " << r.rate() << " |\n";
  }
  out << "| **all** | " << total << " | " << successes << " | " << rate() << " |\n\n";
  out << "| length bin | runs | %sr |\n|---|---:|---:|\n";
  for (const auto& b : bins) {
    out << "| " << b.lo << "-" << b.hi << " | " << b.total << " | " << b.rate() << " |\n";
  }
  return out.str();
}

// --- timing -------------------------------------------------------------------------

std::vector<BenchRow> bench_timing(const std::vector<BenchPlanner>& planners,
                                   const std::vector<NamedMap>& maps, std::size_t trials,
                                   std::uint64_t seed) {
  if (trials == 0) throw std::invalid_argument("bench_timing needs at least one trial");
  const auto queries = sample_eval_queries(maps, trials, seed);
  std::vector<BenchRow> rows;
  for (std::size_t m = 0; m < maps.size(); ++m) {
    for (const auto& planner : planners) {
      BenchRow row;
      row.map_id = maps[m].id;
      row.map_size = std::max(maps[m].map.width(), maps[m].map.height());
      row.planner = planner.name;
      double total_s = 0.0;
      double total_work = 0.0;
      for (const auto& q : queries) {
        if (q.map != m) continue;
        ++row.trials;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const BenchTrial trial = planner.plan(maps[m].map, q.start, q.goal);
          const auto t1 = std::chrono::steady_clock::now();
          total_s += std::chrono::duration<double>(t1 - t0).count();
          total_work += static_cast<double>(trial.work);
        } catch (const std::exception&) {
          ++row.failures;
        }
      }
      const std::size_t ok = row.trials - row.failures;
      row.mean_s = ok ? total_s / static_cast<double>(ok) : 0.0;
      row.mean_work = ok ? total_work / static_cast<double>(ok) : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(9);
  out << "map,size,planner,mean_s,trials,failures\n";
  for (const auto& r : rows) {
    out << r.map_id << ',' << r.map_size << ',' << r.planner << ',' << r.mean_s << ',' << r.trials
        << ',' << r.failures << '\n';
  }
}

std::string render_bench_table(const std::vector<BenchRow>& rows) {
  std::vector<std::string> planners;
  std::vector<std::pair<std::string, int>> maps;
  for (const auto& r : rows) {
    if (std::find(planners.begin(), planners.end(), r.planner) == planners.end()) planners.push_back(r.planner);
    const auto key = std::make_pair(r.map_id, r.map_size);
    if (std::find(maps.begin(), maps.end(), key) == maps.end()) maps.push_back(key);
  }
  std::ostringstream out;
  out << "| map | size |";
  for (const auto& p : planners) out << ' ' << p << " |";
  out << "\n|---|---:|";
  for (std::size_t i = 0; i < planners.size(); ++i) out << "---:|";
  out << '\n';
  for (const auto& [id, size] : maps) {
    out << "| " << id << " | " << size << " |";
    for (const auto& p : planners) {
      const auto it = std::find_if(rows.begin(), rows.end(), [&](const BenchRow& r) {
        return r.map_id == id && r.planner == p;
      });
      char cell[64];
      if (it == rows.end()) {
        std::snprintf(cell, sizeof cell, " - |");
      } else if (it->failures > 0) {
        std::snprintf(cell, sizeof cell, " %.4f (%zu failed) |", it->mean_s, it->failures);
      } else {
        std::snprintf(cell, sizeof cell, " %.4f |", it->mean_s);
      }
      out << cell;
    }
    out << '\n';
  }
  return out.str();
}

BenchPlanner astar_bench_planner() {
  return {"A*", [](const OccupancyMap& map, GridPose s, GridPose g) {
            SearchResult r = astar_search(map, s, g);
            return BenchTrial{std::move(r.path), r.expansions};
          }};
}

}  // namespace diffplan
