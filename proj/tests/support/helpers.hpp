#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "mitoforge/imaging.hpp"

namespace testing {

inline mitoforge::ImageBuffer random_image(std::size_t h, std::size_t w, std::uint64_t seed,
                                           double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(h * w * 3);
  for (double& v : data) v = dist(gen);
  return mitoforge::ImageBuffer(h, w, std::move(data));
}

// Smooth image: each channel is a different low-order polynomial in (x, y).
inline mitoforge::ImageBuffer smooth_image(std::size_t h, std::size_t w) {
  mitoforge::ImageBuffer img(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) / static_cast<double>(w - 1);
      const double v = static_cast<double>(y) / static_cast<double>(h - 1);
      img.set_pixel(y, x, {0.2 + 0.6 * u, 0.1 + 0.8 * v, 0.5 + 0.25 * (u - v)});
    }
  return img;
}

// Every channel stores min(1, r) with r the radius normalised by side / 2.
inline mitoforge::ImageBuffer radial_gradient(std::size_t side) {
  mitoforge::ImageBuffer img(side, side);
  const double center = (static_cast<double>(side) - 1.0) / 2.0;
  const double half = static_cast<double>(side) / 2.0;
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      const double r = std::hypot(static_cast<double>(x) - center,
                                  static_cast<double>(y) - center) / half;
      const double v = std::min(1.0, r);
      img.set_pixel(y, x, {v, v, v});
    }
  return img;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mitoforge_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace testing
