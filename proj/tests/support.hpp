#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "uavinspect/imaging.hpp"

namespace testing {

using uavinspect::RasterImage;

inline RasterImage random_image(int w, int h, int channels, std::mt19937_64& rng, int lo = 0, int hi = 255) {
  std::uniform_int_distribution<int> d(lo, hi);
  RasterImage img(w, h, channels);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(d(rng));
  return img;
}

// Continuous scene of soft Gaussian blobs on a mid-gray ground. Rendering at
// different scales or poses samples the same underlying function.
class BlobScene {
 public:
  BlobScene(double width, double height, int count, std::mt19937_64& rng, double min_sigma = 3.0,
            double max_sigma = 9.0) {
    std::uniform_real_distribution<double> ux(0, width), uy(0, height), us(min_sigma, max_sigma), ua(-110, 110);
    for (int i = 0; i < count; ++i) blobs_.push_back({ux(rng), uy(rng), us(rng), ua(rng)});
  }

  double value(double x, double y) const {
    double v = 128;
    for (const Blob& b : blobs_) {
      const double dx = x - b.x, dy = y - b.y;
      const double r2 = dx * dx + dy * dy;
      if (r2 < 25 * b.sigma * b.sigma) v += b.amplitude * std::exp(-r2 / (2 * b.sigma * b.sigma));
    }
    return std::clamp(v, 0.0, 255.0);
  }

  // Pixel (x, y) shows the scene at ((x - ox) / scale, (y - oy) / scale).
  RasterImage render(int w, int h, double scale = 1.0, double ox = 0, double oy = 0) const {
    RasterImage img(w, h, 1);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        img.at(x, y) = static_cast<std::uint8_t>(std::lround(value((x - ox) / scale, (y - oy) / scale)));
    return img;
  }

 private:
  struct Blob {
    double x, y, sigma, amplitude;
  };
  std::vector<Blob> blobs_;
};

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("uvi_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
