#include "uavinspect/histoseg.hpp"

#include <algorithm>
#include <string>

#include "uavinspect/error.hpp"

namespace uavinspect {

PeakSet::PeakSet(int blank, int surface, int pattern) : blank_(blank), surface_(surface), pattern_(pattern) {
  if (!(0 <= blank && blank < surface && surface < pattern && pattern <= 255)) {
    fail(ErrorCode::InvalidParameter, "peaks must satisfy 0 <= i_b < i_w < i_p <= 255, got (" +
                                          std::to_string(blank) + ", " + std::to_string(surface) + ", " +
                                          std::to_string(pattern) + ")");
  }
}

Histogram compute_histogram(const RasterImage& channel, const RasterImage* mask) {
  require(channel.channels() == 1, ErrorCode::InvalidChannelCount, "histogram needs a 1-channel image");
  if (mask) {
    require(mask->channels() == 1, ErrorCode::InvalidChannelCount, "mask must be 1-channel");
    if (mask->width() != channel.width() || mask->height() != channel.height()) {
      fail(ErrorCode::DimensionMismatch, "mask and image sizes differ");
    }
  }
  Histogram h;
  auto px = channel.data();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (mask && mask->data()[i] == 0) continue;
    ++h.bins[px[i]];
    ++h.total;
  }
  return h;
}

std::array<std::uint64_t, 256> smooth_histogram(const Histogram& h, int window) {
  require(window >= 1, ErrorCode::InvalidParameter, "smoothing window must be >= 1");
  const int left = (window - 1) / 2;
  auto reflect = [](int i) {
    // half-sample symmetric: ... b a | a b c ... x y z | z y ...
    while (i < 0 || i > 255) i = i < 0 ? -i - 1 : 511 - i;
    return i;
  };
  std::array<std::uint64_t, 256> out{};
  for (int i = 0; i < 256; ++i) {
    std::uint64_t s = 0;
    for (int k = 0; k < window; ++k) s += h.bins[reflect(i - left + k)];
    out[i] = s;
  }
  return out;
}

std::vector<Peak> find_peaks(const std::array<std::uint64_t, 256>& s) {
  std::vector<Peak> peaks;
  int i = 0;
  while (i < 256) {
    int j = i;
    while (j + 1 < 256 && s[j + 1] == s[i]) ++j;  // plateau [i, j]
    const bool left_lower = i == 0 || s[i - 1] < s[i];
    const bool right_lower = j == 255 || s[j + 1] < s[i];
    const bool has_neighbour = i > 0 || j < 255;
    if (left_lower && right_lower && has_neighbour && s[i] > 0) {
      const int centre = (i + j) / 2;
      // Walk outwards until a strictly higher bin. A side that runs into the
      // boundary first holds no higher ground and is not a flank.
      std::optional<std::uint64_t> left_min, right_min;
      int k = i - 1;
      for (; k >= 0 && s[k] <= s[i]; --k) left_min = std::min(left_min.value_or(s[k]), s[k]);
      const bool left_flank = k >= 0;
      k = j + 1;
      for (; k < 256 && s[k] <= s[i]; ++k) right_min = std::min(right_min.value_or(s[k]), s[k]);
      const bool right_flank = k < 256;
      std::uint64_t base = 0;
      if (left_flank && right_flank) base = std::max(*left_min, *right_min);
      else if (left_flank) base = *left_min;
      else if (right_flank) base = *right_min;
      peaks.push_back({centre, s[i], s[i] - base});
    }
    i = j + 1;
  }
  return peaks;
}

PeakSet detect_peaks(const Histogram& h, const PeakParams& params) {
  require(h.total > 0, ErrorCode::InvalidParameter, "histogram is empty");
  require(params.min_prominence >= 0.0 && params.min_separation >= 0, ErrorCode::InvalidParameter,
          "invalid peak parameters");
  const auto smoothed = smooth_histogram(h, params.smooth_window);
  const std::uint64_t top = *std::max_element(smoothed.begin(), smoothed.end());

  std::vector<Peak> candidates;
  for (const Peak& p : find_peaks(smoothed)) {
    if (static_cast<double>(p.prominence) >= params.min_prominence * static_cast<double>(top)) {
      candidates.push_back(p);
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Peak& a, const Peak& b) {
    if (a.prominence != b.prominence) return a.prominence > b.prominence;
    return a.bin < b.bin;
  });
  std::vector<int> kept;
  for (const Peak& p : candidates) {
    const bool clear = std::none_of(kept.begin(), kept.end(),
                                    [&](int k) { return std::abs(k - p.bin) < params.min_separation; });
    if (clear) kept.push_back(p.bin);
    if (kept.size() == 3) break;
  }
  if (kept.size() < 3) {
    fail(ErrorCode::PeaksNotFound, "found " + std::to_string(kept.size()) + " dominant peak(s), need 3");
  }
  std::sort(kept.begin(), kept.end());
  return PeakSet(kept[0], kept[1], kept[2]);
}

ThresholdPair compute_thresholds(const PeakSet& p) {
  return {(p.blank() + p.surface()) / 2.0, (p.surface() + p.pattern()) / 2.0};
}

RasterImage remove_patterns(const RasterImage& mosaic, const ThresholdPair& t, std::uint8_t beta) {
  const RasterImage gray = to_gray(mosaic);
  RasterImage out = gray;
  auto rgb = mosaic.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double red = rgb[3 * i];
    if (red < t.t1 || red > t.t2) dst[i] = beta;
  }
  return out;
}

Segmentation segment_patterns(const RasterImage& mosaic, const RasterImage* mask, const PeakParams& params,
                              std::uint8_t beta) {
  Histogram hist = compute_histogram(red_channel(mosaic), mask);
  const PeakSet peaks = detect_peaks(hist, params);
  const ThresholdPair t = compute_thresholds(peaks);
  return Segmentation{hist, peaks, t, remove_patterns(mosaic, t, beta)};
}

nlohmann::json to_json(const Segmentation& s) {
  return {{"histogram", s.histogram.bins},
          {"total", s.histogram.total},
          {"peaks", {{"i_b", s.peaks.blank()}, {"i_w", s.peaks.surface()}, {"i_p", s.peaks.pattern()}}},
          {"thresholds", {{"t1", s.thresholds.t1}, {"t2", s.thresholds.t2}}}};
}

}  // namespace uavinspect
