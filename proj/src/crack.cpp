#include "uavinspect/crack.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "uavinspect/error.hpp"

namespace uavinspect {

void SauvolaParams::validate() const {
  if (window < 3 || window % 2 == 0) {
    fail(ErrorCode::InvalidParameter, "window must be odd and >= 3, got " + std::to_string(window));
  }
  require(r > 0.0, ErrorCode::InvalidParameter, "R must be positive");
  require(k >= 0.0 && k <= 1.0, ErrorCode::InvalidParameter, "k must lie in [0, 1]");
  require(ignore_value >= -1 && ignore_value <= 255, ErrorCode::InvalidParameter, "ignore value must be -1 or 0..255");
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

RasterImage BinaryMask::to_image() const {
  RasterImage img(width_, height_, 1);
  auto d = img.data();
  for (std::size_t i = 0; i < bits_.size(); ++i) d[i] = bits_[i] ? 255 : 0;
  return img;
}

BinaryMask BinaryMask::from_image(const RasterImage& img) {
  require(img.channels() == 1, ErrorCode::InvalidChannelCount, "mask image must be 1-channel");
  BinaryMask m(img.width(), img.height());
  auto d = img.data();
  for (std::size_t i = 0; i < d.size(); ++i) m.bits_[i] = d[i] != 0 ? 1 : 0;
  return m;
}

LocalStats local_stats(const RasterImage& gray, int window, int ignore_value) {
  if (window < 3 || window % 2 == 0) {
    fail(ErrorCode::InvalidParameter, "window must be odd and >= 3, got " + std::to_string(window));
  }
  require(gray.channels() == 1, ErrorCode::InvalidChannelCount, "local statistics need a 1-channel image");
  require(ignore_value >= -1 && ignore_value <= 255, ErrorCode::InvalidParameter, "ignore value must be -1 or 0..255");
  std::optional<IntegralImage> counts;
  RasterImage kept = gray;
  if (ignore_value >= 0) {
    RasterImage valid(gray.width(), gray.height(), 1, 1);
    auto k = kept.data();
    auto v = valid.data();
    for (std::size_t i = 0; i < k.size(); ++i) {
      if (k[i] == ignore_value) {
        k[i] = 0;
        v[i] = 0;
      }
    }
    counts.emplace(valid);
  }
  const IntegralImage integral(kept);
  const int w = gray.width(), h = gray.height(), half = window / 2;
  LocalStats st{w, h, std::vector<double>(gray.pixel_count()), std::vector<double>(gray.pixel_count())};
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - half), y1 = std::min(h, y + half + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - half), x1 = std::min(w, x + half + 1);
      const auto n = static_cast<unsigned __int128>(counts ? counts->sum(x0, y0, x1, y1)
                                                           : static_cast<std::uint64_t>((x1 - x0) * (y1 - y0)));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (n == 0) continue;
      const auto s = static_cast<unsigned __int128>(integral.sum(x0, y0, x1, y1));
      const auto sq = static_cast<unsigned __int128>(integral.sum_squares(x0, y0, x1, y1));
      // n^2 var = n*sum(v^2) - (sum v)^2, exact in integers.
      const unsigned __int128 scaled_var = n * sq - s * s;
      const double nd = static_cast<double>(n);
      st.mean[i] = static_cast<double>(s) / nd;
      st.stdev[i] = std::sqrt(static_cast<double>(scaled_var)) / nd;
    }
  }
  return st;
}

double sauvola_threshold(double mean, double stdev, double k, double r) {
  return mean * (1.0 + k * (stdev / r - 1.0));
}

std::vector<double> sauvola_map(const RasterImage& gray, const SauvolaParams& p) {
  p.validate();
  const LocalStats st = local_stats(gray, p.window, p.ignore_value);
  std::vector<double> t(st.mean.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = sauvola_threshold(st.mean[i], st.stdev[i], p.k, p.r);
  return t;
}

BinaryMask binarize_local(const RasterImage& gray, const SauvolaParams& p) {
  const std::vector<double> t = sauvola_map(gray, p);
  BinaryMask mask(gray.width(), gray.height());
  auto px = gray.data();
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * gray.width() + x;
      const double v = px[i];
      if (px[i] == p.ignore_value) continue;
      mask.set(x, y, p.polarity == Polarity::DarkForeground ? v < t[i] : v > t[i]);
    }
  }
  return mask;
}

BinaryMask binarize_global(const RasterImage& gray, double threshold) {
  require(gray.channels() == 1, ErrorCode::InvalidChannelCount, "thresholding needs a 1-channel image");
  BinaryMask mask(gray.width(), gray.height());
  for (int y = 0; y < gray.height(); ++y)
    for (int x = 0; x < gray.width(); ++x) mask.set(x, y, gray.at(x, y) < threshold);
  return mask;
}

RasterImage median3(const RasterImage& gray) {
  require(gray.channels() == 1, ErrorCode::InvalidChannelCount, "median filter needs a 1-channel image");
  RasterImage out(gray.width(), gray.height(), 1);
  std::array<std::uint8_t, 9> win{};
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = std::clamp(x + dx, 0, gray.width() - 1);
          const int yy = std::clamp(y + dy, 0, gray.height() - 1);
          win[n++] = gray.at(xx, yy);
        }
      std::nth_element(win.begin(), win.begin() + 4, win.end());
      out.at(x, y) = win[4];
    }
  }
  return out;
}

namespace {

void measure(CrackComponent& c) {
  int minx = c.pixels.front().x, maxx = minx, miny = c.pixels.front().y, maxy = miny;
  double sx = 0, sy = 0;
  for (const PixelCoord& p : c.pixels) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
    sx += p.x;
    sy += p.y;
  }
  const double n = static_cast<double>(c.pixels.size());
  c.area = c.pixels.size();
  c.bbox = {minx, miny, maxx - minx + 1, maxy - miny + 1};
  c.centroid_x = sx / n;
  c.centroid_y = sy / n;
  // Pixels are unit squares, each adding 1/12 of variance along both axes.
  double mxx = 1.0 / 12.0, myy = 1.0 / 12.0, mxy = 0.0;
  for (const PixelCoord& p : c.pixels) {
    const double dx = p.x - c.centroid_x, dy = p.y - c.centroid_y;
    mxx += dx * dx / n;
    myy += dy * dy / n;
    mxy += dx * dy / n;
  }
  const double half_tr = 0.5 * (mxx + myy);
  const double disc = std::sqrt(std::max(0.0, 0.25 * (mxx - myy) * (mxx - myy) + mxy * mxy));
  const double l1 = half_tr + disc, l2 = half_tr - disc;
  c.elongation = std::max(1.0, std::sqrt(l1 / std::max(l2, 1e-300)));
  double theta = 0.5 * std::atan2(2.0 * mxy, mxx - myy);
  if (theta <= -std::numbers::pi / 2) theta += std::numbers::pi;
  c.orientation = theta;
}

}  // namespace

std::vector<CrackComponent> connected_components(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(w) * h, 0);
  std::vector<CrackComponent> out;
  std::vector<PixelCoord> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!mask.get(x, y) || visited[i]) continue;
      CrackComponent comp;
      visited[i] = 1;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const PixelCoord p = stack.back();
        stack.pop_back();
        comp.pixels.push_back(p);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x + dx, ny = p.y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
            if (visited[ni] || !mask.get(nx, ny)) continue;
            visited[ni] = 1;
            stack.push_back({nx, ny});
          }
      }
      std::sort(comp.pixels.begin(), comp.pixels.end(),
                [](const PixelCoord& a, const PixelCoord& b) { return a.y < b.y || (a.y == b.y && a.x < b.x); });
      measure(comp);
      out.push_back(std::move(comp));
    }
  }
  return out;
}

std::vector<CrackComponent> filter_candidates(const std::vector<CrackComponent>& components, std::size_t min_area,
                                              double min_elongation) {
  require(min_area >= 1, ErrorCode::InvalidParameter, "min_area must be >= 1");
  require(min_elongation >= 1.0, ErrorCode::InvalidParameter, "min_elongation must be >= 1");
  std::vector<CrackComponent> kept;
  for (const CrackComponent& c : components) {
    if (c.area >= min_area && c.elongation >= min_elongation) kept.push_back(c);
  }
  return kept;
}

CrackReport detect_cracks(const RasterImage& gray, const CrackParams& params, std::string image_id) {
  require(gray.channels() == 1, ErrorCode::InvalidChannelCount, "crack detection needs a 1-channel image");
  const RasterImage input = params.median_prefilter ? median3(gray) : gray;
  CrackReport report;
  report.image = std::move(image_id);
  report.params = params;
  report.mask = binarize_local(input, params.sauvola);
  report.components = filter_candidates(connected_components(report.mask), params.min_area, params.min_elongation);
  return report;
}

BinaryMask component_mask(const std::vector<CrackComponent>& components, int width, int height) {
  BinaryMask m(width, height);
  for (const CrackComponent& c : components)
    for (const PixelCoord& p : c.pixels) m.set(p.x, p.y);
  return m;
}

std::string to_string(Polarity p) { return p == Polarity::DarkForeground ? "dark_foreground" : "bright_foreground"; }

Polarity polarity_from_string(const std::string& s) {
  if (s == "dark_foreground") return Polarity::DarkForeground;
  if (s == "bright_foreground") return Polarity::BrightForeground;
  fail(ErrorCode::InvalidParameter, "unknown polarity '" + s + "'");
}

nlohmann::json to_json(const CrackReport& report) {
  nlohmann::json comps = nlohmann::json::array();
  for (const CrackComponent& c : report.components) {
    comps.push_back({{"area_px", c.area},
                     {"bbox", c.bbox},
                     {"centroid", {c.centroid_x, c.centroid_y}},
                     {"elongation", c.elongation},
                     {"orientation_rad", c.orientation}});
  }
  const SauvolaParams& p = report.params.sauvola;
  nlohmann::json params = {{"N", p.window}, {"k", p.k}, {"R", p.r}, {"polarity", to_string(p.polarity)}};
  if (p.ignore_value >= 0) params["ignore_value"] = p.ignore_value;
  return {{"image", report.image}, {"params", params}, {"components", comps}};
}

}  // namespace uavinspect
