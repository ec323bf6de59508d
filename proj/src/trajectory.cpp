#include "diffplan/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace diffplan {

namespace fs = std::filesystem;

double distance(Point2 a, Point2 b) { return std::hypot(b.x - a.x, b.y - a.y); }

double Trajectory::arc_length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += distance(points[i - 1], points[i]);
  return total;
}

void save_trajectory_csv(const Trajectory& traj, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : traj.points) out << p.x << ',' << p.y << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Trajectory load_trajectory_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read trajectory " + path.string());
  Trajectory traj;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    Point2 p;
    char comma = 0;
    if (!(row >> p.x >> comma >> p.y) || comma != ',') {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected `x,y`, got `" + line + "`");
    }
    traj.points.push_back(p);
  }
  return traj;
}

}  // namespace diffplan
