#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavinspect/imaging.hpp"

namespace uavinspect {

enum class Polarity { DarkForeground, BrightForeground };

struct SauvolaParams {
  int window = 31;  // odd, >= 3
  double k = 0.5;
  double r = 128.0;
  Polarity polarity = Polarity::DarkForeground;
  // Pixels holding this value (0..255) are left out of the window statistics
  // and never reported as foreground; -1 keeps every pixel.
  int ignore_value = -1;

  void validate() const;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height) : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, 0) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool get(int x, int y) const noexcept { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v = true) noexcept { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  std::size_t count() const noexcept;
  bool operator==(const BinaryMask&) const = default;

  // 255 = foreground.
  RasterImage to_image() const;
  static BinaryMask from_image(const RasterImage& img);

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct LocalStats {
  int width = 0, height = 0;
  std::vector<double> mean;
  std::vector<double> stdev;
};

// Window statistics centred on each pixel; windows are clipped at the image
// border and divide by the number of pixels actually covered.
// With ignore_value >= 0, pixels equal to it are left out of every window;
// windows with nothing left get mean 0 and stdev 0.
LocalStats local_stats(const RasterImage& gray, int window, int ignore_value = -1);

std::vector<double> sauvola_map(const RasterImage& gray, const SauvolaParams& p);
double sauvola_threshold(double mean, double stdev, double k, double r);

BinaryMask binarize_local(const RasterImage& gray, const SauvolaParams& p);
BinaryMask binarize_global(const RasterImage& gray, double threshold);

// 3x3 median, used as an optional pre-filter.
RasterImage median3(const RasterImage& gray);

struct PixelCoord {
  int x, y;
  bool operator==(const PixelCoord&) const = default;
};

struct CrackComponent {
  std::vector<PixelCoord> pixels;  // raster order
  std::array<int, 4> bbox{};       // x, y, w, h
  std::size_t area = 0;
  double centroid_x = 0.0, centroid_y = 0.0;
  double elongation = 1.0;   // sqrt(l1 / l2) of the second central moments
  double orientation = 0.0;  // principal axis, radians in (-pi/2, pi/2]
};

// 8-connected components, ordered by their first pixel in raster order.
std::vector<CrackComponent> connected_components(const BinaryMask& mask);

std::vector<CrackComponent> filter_candidates(const std::vector<CrackComponent>& components, std::size_t min_area,
                                              double min_elongation);

struct CrackParams {
  SauvolaParams sauvola;
  std::size_t min_area = 30;
  double min_elongation = 3.0;
  bool median_prefilter = false;
};

struct CrackReport {
  std::string image;
  CrackParams params;
  std::vector<CrackComponent> components;
  BinaryMask mask;  // thresholded foreground before candidate filtering
};

CrackReport detect_cracks(const RasterImage& gray, const CrackParams& params, std::string image_id = {});

// Components rasterised into a mask.
BinaryMask component_mask(const std::vector<CrackComponent>& components, int width, int height);

nlohmann::json to_json(const CrackReport& report);
std::string to_string(Polarity p);
Polarity polarity_from_string(const std::string& s);

}  // namespace uavinspect
