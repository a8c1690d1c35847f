#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "json_fields.hpp"
#include "uavinspect/error.hpp"
#include "uavinspect/synth_wall.hpp"

namespace uavinspect {
namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double lattice(std::int64_t ix, std::int64_t iy, std::uint64_t salt) {
  const std::uint64_t h = mix64(salt ^ mix64(static_cast<std::uint64_t>(ix) * 0x632BE59BD9B4E019ULL +
                                               static_cast<std::uint64_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

// Smooth value noise in [-1, 1].
double value_noise(double x, double y, std::uint64_t salt) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  const double tx = x - fx, ty = y - fy;
  const double sx = tx * tx * (3 - 2 * tx), sy = ty * ty * (3 - 2 * ty);
  const double a = lattice(ix, iy, salt), b = lattice(ix + 1, iy, salt);
  const double c = lattice(ix, iy + 1, salt), d = lattice(ix + 1, iy + 1, salt);
  return (a + (b - a) * sx) * (1 - sy) + (c + (d - c) * sx) * sy;
}

double gray_of(const Rgb& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

double segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

double polyline_distance(const Point2& p, const std::vector<Point2>& line) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < line.size(); ++i) best = std::min(best, segment_distance(p, line[i - 1], line[i]));
  return best;
}

struct Dot {
  Point2 center;
  double radius;
  bool dark;
};

struct Star {
  Point2 center;
  double radius = 0;  // circumscribed
  std::vector<Point2> vertices;
  std::vector<Dot> dots;

  const Dot* dot_at(const Point2& p) const {
    for (const Dot& d : dots) {
      if ((p - d.center).squaredNorm() <= d.radius * d.radius) return &d;
    }
    return nullptr;
  }

  bool contains(const Point2& p) const {
    if ((p - center).squaredNorm() > radius * radius) return false;
    bool inside = false;
    for (std::size_t i = 0, j = vertices.size() - 1; i < vertices.size(); j = i++) {
      const Point2& a = vertices[i];
      const Point2& b = vertices[j];
      if ((a.y() > p.y()) != (b.y() > p.y()) &&
          p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
        inside = !inside;
      }
    }
    return inside;
  }
};

struct Crack {
  std::vector<Point2> line;
  double x0, y0, x1, y1;  // bounding box grown by the half width
};

class Scene {
 public:
  Scene(const SynthWallSpec& spec, std::mt19937_64& rng) : spec_(spec) {
    panel_w_ = spec.panel_width_mm * spec.px_per_mm;
    panel_h_ = spec.panel_height_mm * spec.px_per_mm;
    width_ = static_cast<int>(std::lround(panel_w_ * spec.panel_cols));
    height_ = static_cast<int>(std::lround(panel_h_ * spec.panel_rows));
    surface_gray_ = gray_of(spec.surface_rgb);
    noise_salt_ = rng();
    std::uniform_real_distribution<double> tint(-4.0, 4.0);
    for (int i = 0; i < spec.panel_rows * spec.panel_cols; ++i) panel_tint_.push_back(tint(rng));
    place_cracks(rng);
    place_patterns(rng);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<Crack>& cracks() const { return cracks_; }

  // Small dark pores on a jittered 16 px lattice; returns coverage in [0, 1].
  double pore(const Point2& p) const {
    constexpr double cell = 16.0;
    const auto cx = static_cast<std::int64_t>(std::floor(p.x() / cell));
    const auto cy = static_cast<std::int64_t>(std::floor(p.y() / cell));
    double best = 0.0;
    for (std::int64_t j = cy - 1; j <= cy + 1; ++j) {
      for (std::int64_t i = cx - 1; i <= cx + 1; ++i) {
        const double u = 0.5 + 0.5 * lattice(i, j, noise_salt_ + 7);
        if (u > 0.8) continue;
        const Point2 c((i + 0.5 + 0.4 * lattice(i, j, noise_salt_ + 8)) * cell,
                       (j + 0.5 + 0.4 * lattice(i, j, noise_salt_ + 9)) * cell);
        const double r = 1.9 + 0.7 * lattice(i, j, noise_salt_ + 10);
        const double d = (p - c).norm();
        const double t = std::clamp((r + 0.7 - d) / 1.4, 0.0, 1.0);
        best = std::max(best, t * t * (3 - 2 * t) * (0.7 + 0.3 * u / 0.8));
      }
    }
    return best;
  }

  const Star* star_at(const Point2& p) const {
    for (const Star& s : stars_) {
      if (s.contains(p)) return &s;
    }
    return nullptr;
  }
  bool in_pattern(const Point2& p) const { return star_at(p) != nullptr; }

  bool in_crack(const Point2& p) const {
    const double hw = spec_.crack_width_px / 2;
    for (const Crack& c : cracks_) {
      if (p.x() < c.x0 || p.x() > c.x1 || p.y() < c.y0 || p.y() > c.y1) continue;
      if (polyline_distance(p, c.line) <= hw) return true;
    }
    return false;
  }

  std::array<double, 3> color(const Point2& p) const {
    std::array<double, 3> out{};
    const double light = 1.0 + spec_.illumination_gradient * (2.0 * p.x() / width_ - 1.0);
    if (const Star* star = star_at(p)) {
      // Printed marker: the red channel stays put while green and blue carry
      // dots of several sizes for the feature detector.
      double shift = 0.0;
      if (const Dot* d = star->dot_at(p)) shift = d->dark ? -0.85 : 0.85;
      for (int c = 0; c < 3; ++c) {
        const double base = spec_.pattern_rgb[c];
        const double room = shift < 0 ? base : 255.0 - base;
        out[c] = (c == 0 ? base : base + shift * room) * light;
      }
      return out;
    }
    if (in_crack(p)) {
      const double jitter = 1.0 + 0.06 * value_noise(p.x() / 5.0, p.y() / 5.0, noise_salt_ + 3);
      for (int c = 0; c < 3; ++c) out[c] = spec_.crack_rgb[c] * jitter * light;
      return out;
    }
    const int pc = std::clamp(static_cast<int>(p.x() / panel_w_), 0, spec_.panel_cols - 1);
    const int pr = std::clamp(static_cast<int>(p.y() / panel_h_), 0, spec_.panel_rows - 1);
    // Grain runs along the long panel axis.
    const double grain = 0.45 * value_noise(p.x() / 3.0, p.y() / 60.0, noise_salt_) +
                         0.2 * value_noise(p.x() / 25.0, p.y() / 25.0, noise_salt_ + 1) +
                         0.45 * value_noise(p.x() / 5.0, p.y() / 7.0, noise_salt_ + 6) +
                         0.1 * value_noise(p.x() / 1.3, p.y() / 1.3, noise_salt_ + 2);
    const double offset =
        spec_.grain_amplitude * grain + panel_tint_[pr * spec_.panel_cols + pc] - spec_.pore_contrast * pore(p);
    double shade = light;
    const double hs = spec_.seam_width_px / 2;
    const double dx = std::abs(p.x() - std::round(p.x() / panel_w_) * panel_w_);
    const double dy = std::abs(p.y() - std::round(p.y() / panel_h_) * panel_h_);
    const bool interior_x = p.x() > hs && p.x() < width_ - hs;
    const bool interior_y = p.y() > hs && p.y() < height_ - hs;
    if ((dx <= hs && interior_x) || (dy <= hs && interior_y)) shade *= spec_.seam_darkening;
    for (int c = 0; c < 3; ++c) {
      out[c] = (spec_.surface_rgb[c] + offset * spec_.surface_rgb[c] / surface_gray_) * shade;
    }
    return out;
  }

 private:
  // Panels in the order cracks are assigned to them: centre first, then bottom right.
  std::vector<int> crack_panels() const {
    const int rows = spec_.panel_rows, cols = spec_.panel_cols;
    std::vector<int> order;
    order.push_back((rows / 2) * cols + cols / 2);
    order.push_back(rows * cols - 1);
    for (int i = 0; i < rows * cols; ++i) order.push_back(i);
    std::vector<int> unique;
    for (int p : order) {
      if (std::find(unique.begin(), unique.end(), p) == unique.end()) unique.push_back(p);
    }
    return unique;
  }

  void place_cracks(std::mt19937_64& rng) {
    const std::vector<int> panels = crack_panels();
    std::normal_distribution<double> turn(0.0, 0.25);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double step = 6.0;
    // Keep cracks clear of the seams, where the markers sit.
    const double inset = std::min(std::min(panel_w_, panel_h_) / 4,
                                  spec_.pattern_count > 0 ? spec_.pattern_size_mm * spec_.px_per_mm / 2 + 15 : 20.0);
    for (int k = 0; k < spec_.crack_count; ++k) {
      const int panel = panels[static_cast<std::size_t>(k) % panels.size()];
      const double px0 = (panel % spec_.panel_cols) * panel_w_, py0 = (panel / spec_.panel_cols) * panel_h_;
      const double lo_x = px0 + inset, hi_x = px0 + panel_w_ - inset;
      const double lo_y = py0 + inset, hi_y = py0 + panel_h_ - inset;
      const Point2 mid((lo_x + hi_x) / 2, (lo_y + hi_y) / 2);
      auto inside = [&](const Point2& q) { return q.x() >= lo_x && q.x() <= hi_x && q.y() >= lo_y && q.y() <= hi_y; };
      // Overall direction chosen so the straight chord fits in the panel;
      // the wander around it is mean-reverting so cracks stay line-like.
      const double len = spec_.crack_length_px;
      double base = std::numbers::pi / 2;
      Point2 start = mid;
      for (int attempt = 0; attempt < 64; ++attempt) {
        const double h = unit(rng) * std::numbers::pi;
        const Point2 c = mid + Point2((unit(rng) - 0.5) * 0.3 * (hi_x - lo_x), (unit(rng) - 0.5) * 0.3 * (hi_y - lo_y));
        const Point2 d(std::cos(h), std::sin(h));
        if (inside(c - 0.5 * len * d) && inside(c + 0.5 * len * d)) {
          base = h;
          start = c - 0.5 * len * d;
          break;
        }
      }
      Point2 p = start;
      double wander = 0.0;
      Crack crack;
      crack.line.push_back(p);
      const int steps = std::max(1, static_cast<int>(std::lround(len / step)));
      for (int s = 0; s < steps; ++s) {
        wander = 0.7 * wander + turn(rng);
        const double heading = base + wander;
        p += step * Point2(std::cos(heading), std::sin(heading));
        p = Point2(std::clamp(p.x(), lo_x, hi_x), std::clamp(p.y(), lo_y, hi_y));
        crack.line.push_back(p);
      }
      const double hw = spec_.crack_width_px / 2 + 1;
      crack.x0 = crack.y0 = std::numeric_limits<double>::infinity();
      crack.x1 = crack.y1 = -crack.x0;
      for (const Point2& q : crack.line) {
        crack.x0 = std::min(crack.x0, q.x() - hw);
        crack.y0 = std::min(crack.y0, q.y() - hw);
        crack.x1 = std::max(crack.x1, q.x() + hw);
        crack.y1 = std::max(crack.y1, q.y() + hw);
      }
      cracks_.push_back(std::move(crack));
    }
  }

  void place_patterns(std::mt19937_64& rng) {
    const int panels = spec_.panel_rows * spec_.panel_cols;
    const double radius = spec_.pattern_size_mm * spec_.px_per_mm / 2;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> arms(5, 8);
    // Seam segments first: markers straddling a seam land where neighbouring
    // photos overlap. Any further markers go anywhere inside a panel.
    struct Segment {
      Point2 a, b;
    };
    std::vector<Segment> seams;
    for (int c = 1; c < spec_.panel_cols; ++c)
      for (int r = 0; r < spec_.panel_rows; ++r)
        seams.push_back({Point2(c * panel_w_, r * panel_h_), Point2(c * panel_w_, (r + 1) * panel_h_)});
    for (int r = 1; r < spec_.panel_rows; ++r)
      for (int c = 0; c < spec_.panel_cols; ++c)
        seams.push_back({Point2(c * panel_w_, r * panel_h_), Point2((c + 1) * panel_w_, r * panel_h_)});
    const double margin = radius + 8;
    for (int k = 0; k < spec_.pattern_count; ++k) {
      const bool on_seam = static_cast<std::size_t>(k) < seams.size();
      const int panel = on_seam ? 0 : static_cast<int>((k - seams.size()) % panels);
      const double px0 = (panel % spec_.panel_cols) * panel_w_, py0 = (panel / spec_.panel_cols) * panel_h_;
      Point2 best_c(px0 + panel_w_ / 2, py0 + panel_h_ / 2);
      double best_clear = -std::numeric_limits<double>::infinity();
      for (int attempt = 0; attempt < 400; ++attempt) {
        Point2 c;
        if (on_seam) {
          const Segment& seg = seams[static_cast<std::size_t>(k)];
          const Point2 dir = (seg.b - seg.a).normalized();
          const double len = (seg.b - seg.a).norm();
          const double t = std::min(margin, len / 2) + unit(rng) * std::max(0.0, len - 2 * margin);
          c = seg.a + t * dir + (unit(rng) - 0.5) * 16.0 * Point2(-dir.y(), dir.x());
        } else {
          c = Point2(px0 + margin + unit(rng) * std::max(0.0, panel_w_ - 2 * margin),
                     py0 + margin + unit(rng) * std::max(0.0, panel_h_ - 2 * margin));
        }
        double clear = std::numeric_limits<double>::infinity();
        for (const Crack& cr : cracks_) clear = std::min(clear, polyline_distance(c, cr.line) - radius);
        for (const Star& s : stars_) clear = std::min(clear, (c - s.center).norm() - radius - s.radius);
        if (clear > best_clear) {
          best_clear = clear;
          best_c = c;
        }
        if (clear > 25) break;
      }
      Star star;
      star.center = best_c;
      star.radius = radius;
      const int n = arms(rng);
      const double phase = unit(rng) * 2 * std::numbers::pi;
      for (int i = 0; i < 2 * n; ++i) {
        const double a = phase + i * std::numbers::pi / n;
        const double r = (i % 2 == 0) ? radius * (0.9 + 0.1 * unit(rng)) : radius * (0.7 + 0.1 * unit(rng));
        star.vertices.emplace_back(best_c + r * Point2(std::cos(a), std::sin(a)));
      }
      std::uniform_real_distribution<double> dot_radius(1.5, 5.0);
      for (int attempt = 0; attempt < 300 && star.dots.size() < 80; ++attempt) {
        const Point2 c = best_c + radius * Point2(2 * unit(rng) - 1, 2 * unit(rng) - 1);
        const double r = dot_radius(rng);
        if (!star.contains(c)) continue;
        bool clear = true;
        for (const Dot& d : star.dots) clear = clear && (c - d.center).norm() > r + d.radius + 2.0;
        if (clear) star.dots.push_back(Dot{c, r, star.dots.size() % 2 == 0});
      }
      stars_.push_back(std::move(star));
    }
  }

  const SynthWallSpec& spec_;
  double panel_w_ = 0, panel_h_ = 0;
  int width_ = 0, height_ = 0;
  double surface_gray_ = 0;
  std::uint64_t noise_salt_ = 0;
  std::vector<double> panel_tint_;
  std::vector<Crack> cracks_;
  std::vector<Star> stars_;
};

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

void render(const Scene& scene, RasterImage& img, const Homography* to_wall, const std::array<double, 3>& outside) {
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Point2 p = to_wall ? to_wall->apply(Point2(x, y)) : Point2(x, y);
      const bool inside = p.x() >= -0.5 && p.y() >= -0.5 && p.x() < scene.width() - 0.5 && p.y() < scene.height() - 0.5;
      const auto c = inside ? scene.color(p) : outside;
      for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = to_byte(c[ch]);
    }
  }
}

PointCloud wall_cloud(const SynthWallSpec& spec, std::mt19937_64& rng) {
  const double wm = spec.panel_cols * spec.panel_width_mm * 1e-3;
  const double hm = spec.panel_rows * spec.panel_height_mm * 1e-3;
  const double s = spec.cloud_spacing_m;
  std::normal_distribution<double> noise(0.0, 0.002);
  PointCloud cloud;
  for (double z = 0; z <= hm + 1e-9; z += s) {
    for (double x = 0; x <= wm + 1e-9; x += s) cloud.points.emplace_back(x + noise(rng), noise(rng), z + noise(rng));
  }
  // Bollard standing just left of the wall.
  const double post_r = 0.05;
  for (double z = 0; z <= 0.6 + 1e-9; z += 0.02) {
    for (int k = 0; k < 12; ++k) {
      const double a = k * std::numbers::pi / 6;
      cloud.points.emplace_back(-0.1 + post_r * std::cos(a) + noise(rng), -0.08 + post_r * std::sin(a) + noise(rng),
                                z);
    }
  }
  // Compact obstacle hanging in the flight corridor, below the wall centre.
  const Vec3 centre(wm / 2, -spec.obstacle_standoff_m, hm / 2 - 0.3);
  const double r = 0.05;
  for (int i = 0; i < 6; ++i) {
    const double theta = (i + 0.5) * std::numbers::pi / 6;
    for (int j = 0; j < 12; ++j) {
      const double phi = j * std::numbers::pi / 6;
      cloud.points.push_back(centre + r * Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                                               std::cos(theta)));
    }
  }
  cloud.scan_origin = Vec3(wm / 2, -6.0, hm / 2);
  return cloud;
}

}  // namespace

void SynthWallSpec::validate() const {
  auto check = [](bool ok, const char* what) { require(ok, ErrorCode::InvalidParameter, what); };
  check(panel_rows >= 1 && panel_cols >= 1, "panel grid must be at least 1x1");
  check(panel_width_mm > 0 && panel_height_mm > 0, "panel size must be positive");
  check(px_per_mm > 0 && panel_width_mm * px_per_mm >= 32 && panel_height_mm * px_per_mm >= 32,
        "panels must be at least 32 pixels on a side");
  check(panel_cols * panel_width_mm * px_per_mm * panel_rows * panel_height_mm * px_per_mm <= 5e7,
        "wall raster too large");
  check(pattern_count >= 0 && crack_count >= 0, "counts must be non-negative");
  for (const Rgb* c : {&pattern_rgb, &crack_rgb, &surface_rgb}) {
    for (int v : *c) check(v >= 0 && v <= 255, "colours must be in [0,255]");
  }
  check(gray_of(crack_rgb) < gray_of(surface_rgb), "crack intensity must be below the surface intensity");
  check(gray_of(surface_rgb) < pattern_rgb[0], "surface intensity must be below the pattern red intensity");
  check(pattern_size_mm > 0 && crack_width_px > 0 && crack_length_px > 0, "feature sizes must be positive");
  check(grain_amplitude >= 0 && pore_contrast >= 0 && seam_width_px >= 0,
        "grain, pores and seam must be non-negative");
  check(seam_darkening > 0 && seam_darkening <= 1, "seam darkening must be in (0,1]");
  check(tile_rows >= 1 && tile_cols >= 1, "tile grid must be at least 1x1");
  check(overlap >= 0.1 && overlap <= 0.9, "overlap must be in [0.1, 0.9]");
  check(tile_rotation_deg >= 0 && tile_rotation_deg <= 10, "tile rotation must be in [0,10] degrees");
  check(tile_scale_jitter >= 0 && tile_scale_jitter < 0.2, "tile scale jitter must be in [0,0.2)");
  check(tile_perspective >= 0 && tile_perspective < 1e-3, "tile perspective must be in [0,1e-3)");
  check(illumination_gradient >= 0 && illumination_gradient < 1, "illumination gradient must be in [0,1)");
  check(cloud_spacing_m > 0.005, "cloud spacing must exceed 5 mm");
  check(obstacle_standoff_m > 0, "obstacle standoff must be positive");
}

nlohmann::json to_json(const SynthWallSpec& s) {
  return {{"panel_rows", s.panel_rows},
          {"panel_cols", s.panel_cols},
          {"panel_width_mm", s.panel_width_mm},
          {"panel_height_mm", s.panel_height_mm},
          {"px_per_mm", s.px_per_mm},
          {"pattern_count", s.pattern_count},
          {"pattern_rgb", s.pattern_rgb},
          {"pattern_size_mm", s.pattern_size_mm},
          {"crack_count", s.crack_count},
          {"crack_width_px", s.crack_width_px},
          {"crack_rgb", s.crack_rgb},
          {"crack_length_px", s.crack_length_px},
          {"surface_rgb", s.surface_rgb},
          {"grain_amplitude", s.grain_amplitude},
          {"pore_contrast", s.pore_contrast},
          {"seam_width_px", s.seam_width_px},
          {"seam_darkening", s.seam_darkening},
          {"tile_rows", s.tile_rows},
          {"tile_cols", s.tile_cols},
          {"overlap", s.overlap},
          {"tile_rotation_deg", s.tile_rotation_deg},
          {"tile_scale_jitter", s.tile_scale_jitter},
          {"tile_perspective", s.tile_perspective},
          {"illumination_gradient", s.illumination_gradient},
          {"cloud_spacing_m", s.cloud_spacing_m},
          {"obstacle_standoff_m", s.obstacle_standoff_m},
          {"seed", s.seed}};
}

SynthWallSpec synth_wall_spec_from_json(const nlohmann::json& j) {
  SynthWallSpec s;
  detail::FieldReader r(j, "synth_wall");
  r.read("panel_rows", s.panel_rows);
  r.read("panel_cols", s.panel_cols);
  r.read("panel_width_mm", s.panel_width_mm);
  r.read("panel_height_mm", s.panel_height_mm);
  r.read("px_per_mm", s.px_per_mm);
  r.read("pattern_count", s.pattern_count);
  r.read("pattern_rgb", s.pattern_rgb);
  r.read("pattern_size_mm", s.pattern_size_mm);
  r.read("crack_count", s.crack_count);
  r.read("crack_width_px", s.crack_width_px);
  r.read("crack_rgb", s.crack_rgb);
  r.read("crack_length_px", s.crack_length_px);
  r.read("surface_rgb", s.surface_rgb);
  r.read("grain_amplitude", s.grain_amplitude);
  r.read("pore_contrast", s.pore_contrast);
  r.read("seam_width_px", s.seam_width_px);
  r.read("seam_darkening", s.seam_darkening);
  r.read("tile_rows", s.tile_rows);
  r.read("tile_cols", s.tile_cols);
  r.read("overlap", s.overlap);
  r.read("tile_rotation_deg", s.tile_rotation_deg);
  r.read("tile_scale_jitter", s.tile_scale_jitter);
  r.read("tile_perspective", s.tile_perspective);
  r.read("illumination_gradient", s.illumination_gradient);
  r.read("cloud_spacing_m", s.cloud_spacing_m);
  r.read("obstacle_standoff_m", s.obstacle_standoff_m);
  r.read("seed", s.seed);
  r.finish();
  return s;
}

SynthWall synth_wall(const SynthWallSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Scene scene(spec, rng);
  const int w = scene.width(), h = scene.height();

  SynthWall out;
  out.wall = RasterImage(w, h, 3, 0);
  render(scene, out.wall, nullptr, {0, 0, 0});
  out.pattern_mask = BinaryMask(w, h);
  out.crack_mask = BinaryMask(w, h);
  out.crack_skeleton = BinaryMask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Point2 p(x, y);
      if (scene.in_pattern(p)) {
        out.pattern_mask.set(x, y);
      } else if (scene.in_crack(p)) {
        out.crack_mask.set(x, y);
      }
    }
  }
  for (const auto& crack : scene.cracks()) {
    out.crack_polylines.push_back(crack.line);
    for (std::size_t i = 1; i < crack.line.size(); ++i) {
      const Point2 a = crack.line[i - 1], b = crack.line[i];
      const int n = static_cast<int>(std::ceil((b - a).norm() / 0.25));
      for (int k = 0; k <= n; ++k) {
        const Point2 q = a + (b - a) * (static_cast<double>(k) / std::max(n, 1));
        const int x = static_cast<int>(std::lround(q.x())), y = static_cast<int>(std::lround(q.y()));
        if (x >= 0 && y >= 0 && x < w && y < h && !out.pattern_mask.get(x, y)) out.crack_skeleton.set(x, y);
      }
    }
  }

  // Tiles: a regular grid with the requested overlap, each pose perturbed by a
  // small rotation, scale change and perspective tilt about the tile centre.
  const double rot_max = spec.tile_rotation_deg * std::numbers::pi / 180.0;
  const double slack = std::sin(rot_max) + spec.tile_scale_jitter;
  auto tile_extent = [&](double inner, int n) { return inner / (n - (n - 1) * spec.overlap); };
  double margin = 4.0;
  double tw = 0, th = 0;
  for (int iter = 0; iter < 4; ++iter) {
    tw = tile_extent(w - 2 * margin, spec.tile_cols);
    th = tile_extent(h - 2 * margin, spec.tile_rows);
    const double half_diag = 0.5 * std::hypot(tw, th);
    margin = 4.0 + half_diag * slack + 2.0 * spec.tile_perspective * half_diag * half_diag * 1.5;
  }
  tw = tile_extent(w - 2 * margin, spec.tile_cols);
  th = tile_extent(h - 2 * margin, spec.tile_rows);
  require(tw >= 32 && th >= 32, ErrorCode::InvalidParameter, "tiles would be smaller than 32 pixels");
  const int tile_w = static_cast<int>(std::floor(tw)), tile_h = static_cast<int>(std::floor(th));
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  const std::array<double, 3> outside{40, 40, 40};
  for (int r = 0; r < spec.tile_rows; ++r) {
    for (int c = 0; c < spec.tile_cols; ++c) {
      const double cx = margin + tw / 2 + c * tw * (1 - spec.overlap);
      const double cy = margin + th / 2 + r * th * (1 - spec.overlap);
      const double theta = sym(rng) * rot_max;
      const double scale = 1.0 + sym(rng) * spec.tile_scale_jitter;
      const double p1 = sym(rng) * spec.tile_perspective, p2 = sym(rng) * spec.tile_perspective;
      Mat3d centre_tile = Mat3d::Identity();
      centre_tile(0, 2) = -(tile_w - 1) / 2.0;
      centre_tile(1, 2) = -(tile_h - 1) / 2.0;
      Mat3d tilt = Mat3d::Identity();
      tilt(2, 0) = p1;
      tilt(2, 1) = p2;
      Mat3d rs = Mat3d::Identity();
      rs(0, 0) = scale * std::cos(theta);
      rs(0, 1) = -scale * std::sin(theta);
      rs(1, 0) = scale * std::sin(theta);
      rs(1, 1) = scale * std::cos(theta);
      Mat3d place = Mat3d::Identity();
      place(0, 2) = cx;
      place(1, 2) = cy;
      const Homography to_wall(place * rs * tilt * centre_tile);
      RasterImage tile(tile_w, tile_h, 3, 0);
      render(scene, tile, &to_wall, outside);
      out.tiles.push_back(std::move(tile));
      out.tile_to_wall.push_back(to_wall);
    }
  }
  out.cloud = wall_cloud(spec, rng);
  return out;
}

void write_synth_wall(const SynthWall& wall, const SynthWallSpec& spec, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "tiles", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + (dir / "tiles").string() + ": " + ec.message());
  nlohmann::json tiles = nlohmann::json::array();
  for (std::size_t i = 0; i < wall.tiles.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "tile_%02zu.png", i);
    save_image(wall.tiles[i], dir / "tiles" / name);
    nlohmann::json h = nlohmann::json::array();
    const Mat3d& m = wall.tile_to_wall[i].matrix();
    for (int r = 0; r < 3; ++r) h.push_back({m(r, 0), m(r, 1), m(r, 2)});
    tiles.push_back({{"file", std::string("tiles/") + name}, {"tile_to_wall", h}});
  }
  save_image(wall.wall, dir / "wall.png");
  save_image(wall.pattern_mask.to_image(), dir / "pattern_mask.png");
  save_image(wall.crack_mask.to_image(), dir / "crack_mask.png");
  save_image(wall.crack_skeleton.to_image(), dir / "crack_skeleton.png");
  save_xyz(wall.cloud, dir / "cloud.xyz");
  nlohmann::json cracks = nlohmann::json::array();
  for (const auto& line : wall.crack_polylines) {
    nlohmann::json pts = nlohmann::json::array();
    for (const Point2& p : line) pts.push_back({p.x(), p.y()});
    cracks.push_back(pts);
  }
  const nlohmann::json gt = {{"spec", to_json(spec)},
                             {"wall_size", {wall.wall.width(), wall.wall.height()}},
                             {"tiles", tiles},
                             {"cracks", cracks}};
  std::ofstream os(dir / "ground_truth.json");
  os << gt.dump(2) << '\n';
  if (!os) fail(ErrorCode::IoError, "cannot write " + (dir / "ground_truth.json").string());
}

BinaryMask mask_in_mosaic(const BinaryMask& wall_mask, const Mosaic& mosaic, const SynthWall& wall, Support support) {
  require(mosaic.to_reference.size() == wall.tiles.size(), ErrorCode::DimensionMismatch,
          "mosaic and synthetic wall disagree on the number of tiles");
  const int w = mosaic.image.width(), h = mosaic.image.height();
  BinaryMask out(w, h);
  std::vector<Mat3d> inverse;
  for (const Homography& t : mosaic.to_reference) inverse.push_back(t.inverse().matrix());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mosaic.mask.at(x, y) == 0) continue;
      const Eigen::Vector3d r(x + mosaic.offset.x(), y + mosaic.offset.y(), 1.0);
      for (std::size_t i = wall.tiles.size(); i-- > 0;) {
        const Eigen::Vector3d q = inverse[i] * r;
        const double sx = q.x() / q.z(), sy = q.y() / q.z();
        const double tw = wall.tiles[i].width() - 1, th = wall.tiles[i].height() - 1;
        if (!(sx >= 0.0 && sy >= 0.0 && sx <= tw && sy <= th)) continue;
        auto in_mask = [&](double tx, double ty) {
          const Point2 p = wall.tile_to_wall[i].apply(Point2(tx, ty));
          const long px = std::lround(p.x()), py = std::lround(p.y());
          return px >= 0 && py >= 0 && px < wall_mask.width() && py < wall_mask.height() &&
                 wall_mask.get(static_cast<int>(px), static_cast<int>(py));
        };
        bool hit = false;
        if (support == Support::Nearest) {
          hit = in_mask(std::round(sx), std::round(sy));
        } else {
          const double x0 = std::floor(sx), y0 = std::floor(sy);
          const double x1 = std::min(x0 + 1, tw), y1 = std::min(y0 + 1, th);
          int n = 0;
          for (const double cy : {y0, y1})
            for (const double cx : {x0, x1}) n += in_mask(cx, cy) ? 1 : 0;
          hit = support == Support::Any ? n > 0 : n == 4;
        }
        if (hit) out.set(x, y);
        break;
      }
    }
  }
  return out;
}

}  // namespace uavinspect
