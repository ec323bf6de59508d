#include "diffplan/map_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace diffplan {

namespace fs = std::filesystem;

void save_map(const OccupancyMap& map, const fs::path& path) {
  if (map.empty()) throw std::invalid_argument("save_map: empty map");
  auto pixels = map.to_pixels();
  const cv::Mat image(map.height(), map.width(), CV_8UC1, pixels.data());
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), image, {cv::IMWRITE_PNG_COMPRESSION, 6});
  } catch (const cv::Exception& e) {
    throw std::runtime_error("save_map: " + path.string() + ": " + e.what());
  }
  if (!ok) throw std::runtime_error("save_map: cannot write " + path.string());
}

namespace {

cv::Mat read_image(const fs::path& path, int flags) {
  if (!fs::exists(path)) throw std::runtime_error("map file not found: " + path.string());
  cv::Mat image = cv::imread(path.string(), flags);
  if (image.empty()) throw MapFormatError("cannot decode image " + path.string());
  return image;
}

OccupancyMap from_gray(const cv::Mat& gray, int threshold) {
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(gray.rows) * gray.cols);
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < gray.cols; ++x) {
      pixels[static_cast<std::size_t>(y) * gray.cols + x] = row[x] >= threshold ? 255 : 0;
    }
  }
  return OccupancyMap::from_pixels(gray.cols, gray.rows, pixels);
}

}  // namespace

OccupancyMap load_map(const fs::path& path) {
  const cv::Mat image = read_image(path, cv::IMREAD_UNCHANGED);
  if (image.channels() != 1) {
    throw MapFormatError(path.string() + ": expected a single-channel image, got " +
                         std::to_string(image.channels()) + " channels");
  }
  if (image.depth() != CV_8U) throw MapFormatError(path.string() + ": expected 8-bit pixels");
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(image.rows) * image.cols);
  for (int y = 0; y < image.rows; ++y) {
    const auto* row = image.ptr<std::uint8_t>(y);
    std::copy(row, row + image.cols, pixels.begin() + static_cast<std::ptrdiff_t>(y) * image.cols);
  }
  try {
    return OccupancyMap::from_pixels(image.cols, image.rows, pixels);
  } catch (const MapFormatError& e) {
    throw MapFormatError(path.string() + ": " + e.what());
  }
}

OccupancyMap import_map(const fs::path& path, int threshold) {
  cv::Mat image = read_image(path, cv::IMREAD_UNCHANGED);
  if (image.depth() != CV_8U) {
    cv::Mat scaled;
    double lo = 0, hi = 0;
    cv::minMaxLoc(image.reshape(1), &lo, &hi);
    image.convertTo(scaled, CV_8U, hi > lo ? 255.0 / (hi - lo) : 1.0,
                    hi > lo ? -lo * 255.0 / (hi - lo) : 0.0);
    image = scaled;
  }
  cv::Mat gray;
  switch (image.channels()) {
    case 1: gray = image; break;
    case 3: cv::cvtColor(image, gray, cv::COLOR_BGR2GRAY); break;
    case 4: cv::cvtColor(image, gray, cv::COLOR_BGRA2GRAY); break;
    default:
      throw MapFormatError(path.string() + ": unsupported channel count " +
                           std::to_string(image.channels()));
  }
  return from_gray(gray, threshold);
}

OccupancyMap resize_nearest(const OccupancyMap& map, int width, int height) {
  if (map.width() == width && map.height() == height) return map;
  OccupancyMap out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(map.height() - 1, static_cast<int>((y + 0.5) * map.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(map.width() - 1, static_cast<int>((x + 0.5) * map.width() / width));
      out.set(x, y, map.at(sx, sy));
    }
  }
  return out;
}

}  // namespace diffplan
