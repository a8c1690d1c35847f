#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include <json.hpp>

#include "uavinspect/imaging.hpp"

namespace uavinspect {

struct Histogram {
  std::array<std::uint64_t, 256> bins{};
  std::uint64_t total = 0;
};

// Dominant peaks for blank area, inspected surface and stitching pattern.
class PeakSet {
 public:
  PeakSet(int blank, int surface, int pattern);

  int blank() const noexcept { return blank_; }
  int surface() const noexcept { return surface_; }
  int pattern() const noexcept { return pattern_; }
  bool operator==(const PeakSet&) const = default;

 private:
  int blank_, surface_, pattern_;
};

struct ThresholdPair {
  double t1 = 0.0;
  double t2 = 0.0;
};

struct PeakParams {
  int smooth_window = 5;
  double min_prominence = 0.05;  // fraction of the largest smoothed bin
  int min_separation = 10;       // bins
};

// Mask pixels != 0 are counted; without a mask every pixel is.
Histogram compute_histogram(const RasterImage& channel, const RasterImage* mask = nullptr);

// Moving-average smoothing with half-sample symmetric boundaries; the values
// are window sums, not means, so they stay integral.
std::array<std::uint64_t, 256> smooth_histogram(const Histogram& h, int window);

// Prominence of each local maximum of the smoothed histogram: height above
// the higher of its two flanking minima. A flank is the stretch up to the
// nearest strictly higher bin; a side without one (edge or global maximum) is
// skipped, and a peak with no flank at all has its full height.
struct Peak {
  int bin;
  std::uint64_t height;
  std::uint64_t prominence;
};
std::vector<Peak> find_peaks(const std::array<std::uint64_t, 256>& smoothed);

PeakSet detect_peaks(const Histogram& h, const PeakParams& params = {});
ThresholdPair compute_thresholds(const PeakSet& p);

// I_gr = beta where red < t1 or red > t2, luma otherwise.
RasterImage remove_patterns(const RasterImage& mosaic, const ThresholdPair& t, std::uint8_t beta = 255);

struct Segmentation {
  Histogram histogram;
  PeakSet peaks;
  ThresholdPair thresholds;
  RasterImage gray;  // pattern-removed gray image
};

// Red-channel histogram (optionally masked), peaks, thresholds, removal.
Segmentation segment_patterns(const RasterImage& mosaic, const RasterImage* mask, const PeakParams& params,
                              std::uint8_t beta = 255);

nlohmann::json to_json(const Segmentation& s);

}  // namespace uavinspect
