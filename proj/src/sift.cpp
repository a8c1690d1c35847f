// Difference-of-Gaussians keypoints with gradient-histogram descriptors.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "uavinspect/error.hpp"
#include "uavinspect/stitch.hpp"

namespace uavinspect {
namespace {

constexpr int kBorder = 5;
constexpr int kRefineSteps = 5;
constexpr int kOrientationBins = 36;
constexpr double kOrientationPeakRatio = 0.8;
constexpr int kDescWidth = 4;
constexpr int kDescBins = 8;
constexpr double kDescClamp = 0.2;

struct Plane {
  int w = 0, h = 0;
  std::vector<float> v;

  Plane() = default;
  Plane(int width, int height) : w(width), h(height), v(static_cast<std::size_t>(width) * height, 0.f) {}
  float at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
  float& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane gaussian_blur(const Plane& src, double sigma) {
  if (sigma <= 0.0) return src;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
    total += kernel[i + radius];
  }
  for (float& k : kernel) k = static_cast<float>(k / total);

  Plane tmp(src.w, src.h), out(src.w, src.h);
  for (int y = 0; y < src.h; ++y) {
    const float* row = &src.v[static_cast<std::size_t>(y) * src.w];
    for (int x = 0; x < src.w; ++x) {
      float acc = 0.f;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * row[std::clamp(x + i, 0, src.w - 1)];
      tmp.at(x, y) = acc;
    }
  }
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      float acc = 0.f;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.at(x, std::clamp(y + i, 0, src.h - 1));
      out.at(x, y) = acc;
    }
  }
  return out;
}

// Bilinear 2x enlargement, pixel centres aligned.
Plane upsample(const Plane& src) {
  Plane out(2 * src.w, 2 * src.h);
  for (int y = 0; y < out.h; ++y) {
    const double sy = std::clamp(y / 2.0 - 0.25, 0.0, src.h - 1.0);
    const int y0 = static_cast<int>(sy), y1 = std::min(y0 + 1, src.h - 1);
    const float fy = static_cast<float>(sy - y0);
    for (int x = 0; x < out.w; ++x) {
      const double sx = std::clamp(x / 2.0 - 0.25, 0.0, src.w - 1.0);
      const int x0 = static_cast<int>(sx), x1 = std::min(x0 + 1, src.w - 1);
      const float fx = static_cast<float>(sx - x0);
      const float top = src.at(x0, y0) + fx * (src.at(x1, y0) - src.at(x0, y0));
      const float bottom = src.at(x0, y1) + fx * (src.at(x1, y1) - src.at(x0, y1));
      out.at(x, y) = top + fy * (bottom - top);
    }
  }
  return out;
}

Plane halve(const Plane& src) {
  Plane out(std::max(1, src.w / 2), std::max(1, src.h / 2));
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) out.at(x, y) = src.at(2 * x, 2 * y);
  return out;
}

struct Octave {
  std::vector<Plane> gauss;  // scales + 3 images
  std::vector<Plane> dog;    // scales + 2 images
};

struct Extremum {
  int octave;
  int layer;
  double x, y, layer_offset;
  double response;
};

class Detector {
 public:
  Detector(const RasterImage& gray, const SiftParams& p) : params_(p) {
    Plane input(gray.width(), gray.height());
    auto src = gray.data();
    for (std::size_t i = 0; i < src.size(); ++i) input.v[i] = static_cast<float>(src[i] / 255.0);
    const Plane base = p.upsample ? upsample(input) : input;
    base_scale_ = p.upsample ? 0.5 : 1.0;
    const double blur_in = p.upsample ? 2.0 * p.assumed_blur : p.assumed_blur;

    const int s = p.scales_per_octave;
    int n_oct = std::max(1, static_cast<int>(std::floor(std::log2(std::min(base.w, base.h)))) - 3);
    if (p.max_octaves > 0) n_oct = std::min(n_oct, p.max_octaves);

    const double k = std::pow(2.0, 1.0 / s);
    std::vector<double> increments(s + 3);
    increments[0] = std::sqrt(std::max(p.sigma * p.sigma - blur_in * blur_in, 0.01));
    for (int i = 1; i < s + 3; ++i) {
      const double prev = p.sigma * std::pow(k, i - 1);
      const double cur = prev * k;
      increments[i] = std::sqrt(cur * cur - prev * prev);
    }

    Plane seed = gaussian_blur(base, increments[0]);
    for (int o = 0; o < n_oct; ++o) {
      Octave oct;
      oct.gauss.push_back(o == 0 ? seed : halve(octaves_.back().gauss[s]));
      for (int i = 1; i < s + 3; ++i) oct.gauss.push_back(gaussian_blur(oct.gauss.back(), increments[i]));
      for (int i = 0; i < s + 2; ++i) {
        Plane d(oct.gauss[i].w, oct.gauss[i].h);
        for (std::size_t j = 0; j < d.v.size(); ++j) d.v[j] = oct.gauss[i + 1].v[j] - oct.gauss[i].v[j];
        oct.dog.push_back(std::move(d));
      }
      octaves_.push_back(std::move(oct));
      if (octaves_.back().gauss[s].w < 2 * (2 * kBorder + 2) || octaves_.back().gauss[s].h < 2 * (2 * kBorder + 2)) break;
    }
  }

  std::vector<Keypoint> run() {
    std::vector<Keypoint> out;
    const int s = params_.scales_per_octave;
    const float prelim = static_cast<float>(0.5 * params_.contrast_threshold / s);
    for (int o = 0; o < static_cast<int>(octaves_.size()); ++o) {
      const Octave& oct = octaves_[o];
      for (int layer = 1; layer <= s; ++layer) {
        const Plane& cur = oct.dog[layer];
        for (int y = kBorder; y < cur.h - kBorder; ++y) {
          for (int x = kBorder; x < cur.w - kBorder; ++x) {
            const float v = cur.at(x, y);
            if (std::abs(v) <= prelim) continue;
            if (!is_extremum(oct, layer, x, y, v)) continue;
            Extremum e{};
            if (!refine(o, layer, x, y, e)) continue;
            describe(e, out);
          }
        }
      }
    }
    return out;
  }

 private:
  static bool is_extremum(const Octave& oct, int layer, int x, int y, float v) {
    const bool is_max = v > 0;
    for (int dl = -1; dl <= 1; ++dl) {
      const Plane& p = oct.dog[layer + dl];
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dl == 0 && dx == 0 && dy == 0) continue;
          const float n = p.at(x + dx, y + dy);
          if (is_max ? n >= v : n <= v) return false;
        }
    }
    return true;
  }

  // Quadratic fit of the DoG around the sample; rejects low-contrast and
  // edge-like responses.
  bool refine(int o, int layer, int x, int y, Extremum& e) const {
    const Octave& oct = octaves_[o];
    const int s = params_.scales_per_octave;
    Eigen::Vector3d offset;
    Eigen::Vector3d grad;
    for (int step = 0;; ++step) {
      if (step >= kRefineSteps) return false;
      const Plane& prev = oct.dog[layer - 1];
      const Plane& cur = oct.dog[layer];
      const Plane& next = oct.dog[layer + 1];
      const double c = cur.at(x, y);
      grad << 0.5 * (cur.at(x + 1, y) - cur.at(x - 1, y)), 0.5 * (cur.at(x, y + 1) - cur.at(x, y - 1)),
          0.5 * (next.at(x, y) - prev.at(x, y));
      const double dxx = cur.at(x + 1, y) + cur.at(x - 1, y) - 2 * c;
      const double dyy = cur.at(x, y + 1) + cur.at(x, y - 1) - 2 * c;
      const double dss = next.at(x, y) + prev.at(x, y) - 2 * c;
      const double dxy = 0.25 * (cur.at(x + 1, y + 1) - cur.at(x - 1, y + 1) - cur.at(x + 1, y - 1) + cur.at(x - 1, y - 1));
      const double dxs = 0.25 * (next.at(x + 1, y) - next.at(x - 1, y) - prev.at(x + 1, y) + prev.at(x - 1, y));
      const double dys = 0.25 * (next.at(x, y + 1) - next.at(x, y - 1) - prev.at(x, y + 1) + prev.at(x, y - 1));
      Eigen::Matrix3d hess;
      hess << dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss;
      const Eigen::FullPivLU<Eigen::Matrix3d> lu(hess);
      if (!lu.isInvertible()) return false;
      offset = -lu.solve(grad);
      if ((offset.cwiseAbs().array() < 0.5).all()) {
        const double contrast = c + 0.5 * grad.dot(offset);
        if (std::abs(contrast) * s < params_.contrast_threshold) return false;
        const double tr = dxx + dyy;
        const double det = dxx * dyy - dxy * dxy;
        const double r = params_.edge_ratio;
        if (det <= 0.0 || tr * tr * r >= (r + 1) * (r + 1) * det) return false;
        e = Extremum{o, layer, x + offset.x(), y + offset.y(), offset.z(), std::abs(contrast)};
        return true;
      }
      x += static_cast<int>(std::lround(offset.x()));
      y += static_cast<int>(std::lround(offset.y()));
      layer += static_cast<int>(std::lround(offset.z()));
      if (layer < 1 || layer > s || x < kBorder || x >= cur.w - kBorder || y < kBorder || y >= cur.h - kBorder) {
        return false;
      }
    }
  }

  void describe(const Extremum& e, std::vector<Keypoint>& out) const {
    const int s = params_.scales_per_octave;
    const double octave_sigma = params_.sigma * std::pow(2.0, (e.layer + e.layer_offset) / s);
    const double scale_factor = std::ldexp(1.0, e.octave);
    // Base-image coordinates back to input pixels (see upsample()).
    auto to_input = [this](double b) { return base_scale_ < 1.0 ? b * base_scale_ - 0.25 : b; };
    const Plane& img = octaves_[e.octave].gauss[e.layer];
    const int px = static_cast<int>(std::lround(e.x));
    const int py = static_cast<int>(std::lround(e.y));

    // Orientation histogram.
    std::array<double, kOrientationBins> hist{};
    const double ori_sigma = 1.5 * octave_sigma;
    const int radius = static_cast<int>(std::lround(3.0 * ori_sigma));
    for (int dy = -radius; dy <= radius; ++dy) {
      const int y = py + dy;
      if (y <= 0 || y >= img.h - 1) continue;
      for (int dx = -radius; dx <= radius; ++dx) {
        const int x = px + dx;
        if (x <= 0 || x >= img.w - 1) continue;
        const double gx = img.at(x + 1, y) - img.at(x - 1, y);
        const double gy = img.at(x, y + 1) - img.at(x, y - 1);
        const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * ori_sigma * ori_sigma));
        double angle = std::atan2(gy, gx);
        if (angle < 0) angle += 2 * std::numbers::pi;
        int bin = static_cast<int>(std::lround(angle * kOrientationBins / (2 * std::numbers::pi)));
        if (bin >= kOrientationBins) bin -= kOrientationBins;
        hist[bin] += w * std::hypot(gx, gy);
      }
    }
    std::array<double, kOrientationBins> smooth{};
    for (int i = 0; i < kOrientationBins; ++i) {
      auto at = [&](int j) { return hist[(j + kOrientationBins) % kOrientationBins]; };
      smooth[i] = (at(i - 2) + at(i + 2)) / 16.0 + 4.0 * (at(i - 1) + at(i + 1)) / 16.0 + 6.0 * at(i) / 16.0;
    }
    const double peak = *std::max_element(smooth.begin(), smooth.end());
    if (!(peak > 0.0)) return;
    for (int i = 0; i < kOrientationBins; ++i) {
      const double l = smooth[(i + kOrientationBins - 1) % kOrientationBins];
      const double r = smooth[(i + 1) % kOrientationBins];
      if (smooth[i] <= l || smooth[i] <= r || smooth[i] < kOrientationPeakRatio * peak) continue;
      double bin = i + 0.5 * (l - r) / (l - 2 * smooth[i] + r);
      if (bin < 0) bin += kOrientationBins;
      if (bin >= kOrientationBins) bin -= kOrientationBins;
      const double orientation = bin * 2 * std::numbers::pi / kOrientationBins;

      Keypoint kp;
      kp.x = to_input(e.x * scale_factor);
      kp.y = to_input(e.y * scale_factor);
      kp.scale = octave_sigma * scale_factor * base_scale_;
      kp.orientation = orientation;
      kp.response = e.response;
      if (descriptor(img, e.x, e.y, octave_sigma, orientation, kp.descriptor)) out.push_back(kp);
    }
  }

  static bool descriptor(const Plane& img, double kx, double ky, double sigma, double orientation,
                         std::array<float, 128>& desc) {
    constexpr int d = kDescWidth;
    constexpr int n = kDescBins;
    const double hist_width = 3.0 * sigma;
    const int radius = std::min(
        static_cast<int>(std::lround(hist_width * std::numbers::sqrt2 * (d + 1) * 0.5)),
        static_cast<int>(std::hypot(img.w, img.h)));
    const double cos_t = std::cos(orientation) / hist_width;
    const double sin_t = std::sin(orientation) / hist_width;
    const int cx = static_cast<int>(std::lround(kx));
    const int cy = static_cast<int>(std::lround(ky));

    std::array<double, (d + 2) * (d + 2) * (n + 2)> hist{};
    auto cell = [&](int r, int c, int o) -> double& { return hist[((r + 1) * (d + 2) + (c + 1)) * (n + 2) + o]; };

    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        // Rotate into the keypoint frame, measured in histogram cells.
        const double c_rot = dx * cos_t + dy * sin_t;
        const double r_rot = -dx * sin_t + dy * cos_t;
        const double rbin = r_rot + d / 2.0 - 0.5;
        const double cbin = c_rot + d / 2.0 - 0.5;
        const int x = cx + dx, y = cy + dy;
        if (rbin <= -1 || rbin >= d || cbin <= -1 || cbin >= d) continue;
        if (x <= 0 || x >= img.w - 1 || y <= 0 || y >= img.h - 1) continue;
        const double gx = img.at(x + 1, y) - img.at(x - 1, y);
        const double gy = img.at(x, y + 1) - img.at(x, y - 1);
        double angle = std::atan2(gy, gx) - orientation;
        while (angle < 0) angle += 2 * std::numbers::pi;
        while (angle >= 2 * std::numbers::pi) angle -= 2 * std::numbers::pi;
        const double obin = angle * n / (2 * std::numbers::pi);
        const double weight = std::exp(-(c_rot * c_rot + r_rot * r_rot) / (0.5 * d * d)) * std::hypot(gx, gy);

        const int r0 = static_cast<int>(std::floor(rbin));
        const int c0 = static_cast<int>(std::floor(cbin));
        const int o0 = static_cast<int>(std::floor(obin));
        const double fr = rbin - r0, fc = cbin - c0, fo = obin - o0;
        for (int ir = 0; ir <= 1; ++ir) {
          const double wr = weight * (ir ? fr : 1 - fr);
          for (int ic = 0; ic <= 1; ++ic) {
            const double wc = wr * (ic ? fc : 1 - fc);
            for (int io = 0; io <= 1; ++io) {
              cell(r0 + ir, c0 + ic, (o0 + io) % n) += wc * (io ? fo : 1 - fo);
            }
          }
        }
      }
    }

    std::array<double, 128> raw{};
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        for (int o = 0; o < n; ++o) raw[(r * d + c) * n + o] = cell(r, c, o);

    auto normalise = [&raw]() {
      double norm = 0.0;
      for (double v : raw) norm += v * v;
      norm = std::sqrt(norm);
      if (!(norm > 1e-12)) return false;
      for (double& v : raw) v /= norm;
      return true;
    };
    if (!normalise()) return false;
    for (double& v : raw) v = std::min(v, kDescClamp);
    if (!normalise()) return false;
    for (int i = 0; i < 128; ++i) desc[i] = static_cast<float>(raw[i]);
    // Renormalise in float so the stored vector itself has unit length.
    double norm = 0.0;
    for (float v : desc) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    for (float& v : desc) v = static_cast<float>(v / norm);
    return true;
  }

  SiftParams params_;
  double base_scale_ = 1.0;  // base-image pixels to input pixels
  std::vector<Octave> octaves_;
};

}  // namespace

std::vector<Keypoint> detect_keypoints(const RasterImage& gray, const SiftParams& params) {
  require(gray.channels() == 1, ErrorCode::InvalidChannelCount, "keypoint detection needs a 1-channel image");
  if (gray.width() < 32 || gray.height() < 32) {
    fail(ErrorCode::ImageTooSmall, "keypoint detection needs at least 32x32 pixels");
  }
  require(params.scales_per_octave >= 1 && params.sigma > 0 && params.contrast_threshold >= 0 &&
              params.edge_ratio > 1,
          ErrorCode::InvalidParameter, "invalid keypoint detector parameters");
  return Detector(gray, params).run();
}

}  // namespace uavinspect
