#include "diffplan/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace diffplan {

namespace fs = std::filesystem;

namespace {

cv::Scalar bgr(const Rgb& c) { return {static_cast<double>(c[2]), static_cast<double>(c[1]), static_cast<double>(c[0])}; }

void write_png(const cv::Mat& image, const fs::path& png) {
  if (png.has_parent_path()) fs::create_directories(png.parent_path());
  if (!cv::imwrite(png.string(), image)) throw std::runtime_error("cannot write " + png.string());
}

std::string format_tick(double v) {
  char buf[32];
  if (v != 0.0 && (std::fabs(v) < 1e-2 || std::fabs(v) >= 1e4)) {
    std::snprintf(buf, sizeof buf, "%.1e", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.3g", v);
  }
  return buf;
}

}  // namespace

void save_overlay(const OccupancyMap& map, const std::vector<OverlayPath>& paths, GridPose start,
                  GridPose goal, const fs::path& png, int scale) {
  if (scale < 1) throw std::invalid_argument("scale must be >= 1");
  cv::Mat image(map.height() * scale, map.width() * scale, CV_8UC3);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const cv::Scalar c = map.at(x, y) == Cell::Free ? cv::Scalar(255, 255, 255) : cv::Scalar(60, 60, 60);
      cv::rectangle(image, cv::Rect(x * scale, y * scale, scale, scale), c, cv::FILLED);
    }
  }
  auto px = [scale](const Point2& p) {
    return cv::Point(static_cast<int>(std::lround((p.x + 0.5) * scale)),
                     static_cast<int>(std::lround((p.y + 0.5) * scale)));
  };
  const int thickness = std::max(1, scale / 3);
  for (const auto& path : paths) {
    const auto& pts = path.trajectory.points;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      cv::line(image, px(pts[i - 1]), px(pts[i]), bgr(path.color), thickness, cv::LINE_AA);
    }
  }
  const int radius = std::max(2, scale);
  cv::circle(image, px(to_point(start)), radius, cv::Scalar(40, 180, 40), cv::FILLED);
  cv::circle(image, px(to_point(goal)), radius, cv::Scalar(200, 80, 20), cv::FILLED);
  write_png(image, png);
}

void save_line_plot(const PlotSpec& spec, const std::vector<Series>& series, const fs::path& png) {
  const int left = 80, right = 20, top = 40, bottom = 60;
  cv::Mat image(spec.height, spec.width, CV_8UC3, cv::Scalar(255, 255, 255));
  auto ty = [&](double y) { return spec.log_y ? std::log10(std::max(y, 1e-12)) : y; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("series " + s.name + ": x/y size mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const int pw = spec.width - left - right, ph = spec.height - top - bottom;
  auto to_px = [&](double x, double y) {
    return cv::Point(left + static_cast<int>(std::lround((x - x0) / (x1 - x0) * pw)),
                     top + ph - static_cast<int>(std::lround((ty(y) - y0) / (y1 - y0) * ph)));
  };
  const cv::Scalar black(0, 0, 0), grid(225, 225, 225);
  const auto font = cv::FONT_HERSHEY_SIMPLEX;

  for (int i = 0; i <= 5; ++i) {
    const double fx = x0 + (x1 - x0) * i / 5.0;
    const double fy = y0 + (y1 - y0) * i / 5.0;
    const int gx = left + pw * i / 5, gy = top + ph - ph * i / 5;
    cv::line(image, {gx, top}, {gx, top + ph}, grid, 1);
    cv::line(image, {left, gy}, {left + pw, gy}, grid, 1);
    cv::putText(image, format_tick(fx), {gx - 15, top + ph + 18}, font, 0.4, black, 1, cv::LINE_AA);
    cv::putText(image, format_tick(spec.log_y ? std::pow(10.0, fy) : fy), {5, gy + 4}, font, 0.4, black, 1,
                cv::LINE_AA);
  }
  cv::rectangle(image, cv::Rect(left, top, pw, ph), black, 1);
  cv::putText(image, spec.title, {left, 25}, font, 0.6, black, 1, cv::LINE_AA);
  cv::putText(image, spec.x_label, {left + pw / 2 - 40, spec.height - 15}, font, 0.5, black, 1, cv::LINE_AA);
  cv::putText(image, spec.y_label + (spec.log_y ? " (log)" : ""), {5, top - 8}, font, 0.45, black, 1,
              cv::LINE_AA);

  int legend_y = top + 18;
  for (const auto& s : series) {
    std::vector<std::size_t> order(s.x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto p = to_px(s.x[order[i]], s.y[order[i]]);
      if (i > 0) cv::line(image, to_px(s.x[order[i - 1]], s.y[order[i - 1]]), p, bgr(s.color), 2, cv::LINE_AA);
      cv::circle(image, p, 4, bgr(s.color), cv::FILLED, cv::LINE_AA);
    }
    cv::line(image, {left + pw - 150, legend_y - 4}, {left + pw - 125, legend_y - 4}, bgr(s.color), 2);
    cv::putText(image, s.name, {left + pw - 120, legend_y}, font, 0.45, black, 1, cv::LINE_AA);
    legend_y += 18;
  }
  write_png(image, png);
}

void write_series_csv(const std::vector<Series>& series, const fs::path& csv) {
  if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
  std::ofstream out(csv);
  if (!out) throw std::runtime_error("cannot write " + csv.string());
  out.precision(10);
  out << "series,x,y\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      out << s.name << ',' << s.x[i] << ',' << s.y[i] << '\n';
    }
  }
}

}  // namespace diffplan
