#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>

#include "uavinspect/error.hpp"
#include "uavinspect/stitch.hpp"

namespace uavinspect {
namespace {

constexpr double kMaxCanvasPixels = 2.0e8;

std::uint8_t bilinear(const RasterImage& img, double x, double y, int c) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = (1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
  const double bottom = (1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
  const double v = (1 - fy) * top + fy * bottom;
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace

Mosaic compose_mosaic(std::span<const RasterImage> images, std::span<const MatchSet> matches,
                      std::uint8_t blank_fill) {
  require(!images.empty(), ErrorCode::InvalidParameter, "mosaic needs at least one image");
  for (const RasterImage& img : images) {
    require(img.channels() == 3, ErrorCode::InvalidChannelCount, "mosaic inputs must be 3-channel");
  }
  const std::size_t n = images.size();

  std::vector<const MatchSet*> edges;
  std::vector<std::size_t> degree(n, 0);
  for (const MatchSet& ms : matches) {
    if (!ms.verified) continue;
    require(ms.image_a < n && ms.image_b < n && ms.image_a != ms.image_b, ErrorCode::InvalidParameter,
            "match set refers to an unknown image");
    edges.push_back(&ms);
    ++degree[ms.image_a];
    ++degree[ms.image_b];
  }
  const std::size_t reference =
      static_cast<std::size_t>(std::max_element(degree.begin(), degree.end()) - degree.begin());

  // Maximum-inlier spanning tree.
  std::stable_sort(edges.begin(), edges.end(), [](const MatchSet* x, const MatchSet* y) {
    const auto cx = x->inlier_count(), cy = y->inlier_count();
    if (cx != cy) return cx > cy;
    return std::pair(x->image_a, x->image_b) < std::pair(y->image_a, y->image_b);
  });
  UnionFind uf(n);
  std::vector<std::vector<const MatchSet*>> tree(n);
  for (const MatchSet* e : edges) {
    if (uf.unite(e->image_a, e->image_b)) {
      tree[e->image_a].push_back(e);
      tree[e->image_b].push_back(e);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < n; ++i) components[uf.find(i)].push_back(i);
  if (components.size() > 1) {
    std::ostringstream msg;
    msg << "verified matches leave " << components.size() << " components:";
    for (const auto& [root, members] : components) {
      msg << " {";
      for (std::size_t k = 0; k < members.size(); ++k) msg << (k ? "," : "") << members[k];
      msg << "}";
    }
    fail(ErrorCode::StitchGraphDisconnected, msg.str());
  }

  Mosaic mosaic;
  mosaic.reference = reference;
  mosaic.to_reference.assign(n, Homography());
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(reference);
  seen[reference] = true;
  while (!frontier.empty()) {
    const std::size_t p = frontier.front();
    frontier.pop();
    for (const MatchSet* e : tree[p]) {
      const std::size_t c = e->image_a == p ? e->image_b : e->image_a;
      if (seen[c]) continue;
      seen[c] = true;
      // e->h maps image_a into image_b.
      mosaic.to_reference[c] =
          e->image_a == c ? mosaic.to_reference[p] * e->h : mosaic.to_reference[p] * e->h.inverse();
      frontier.push(c);
    }
  }

  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = images[i].width() - 1, h = images[i].height() - 1;
    for (const Point2& corner : {Point2(0, 0), Point2(w, 0), Point2(w, h), Point2(0, h)}) {
      const Eigen::Vector3d q = mosaic.to_reference[i].matrix() * Eigen::Vector3d(corner.x(), corner.y(), 1.0);
      if (!(q.z() > 1e-9)) fail(ErrorCode::DegenerateGeometry, "image corner maps behind the reference view");
      min_x = std::min(min_x, q.x() / q.z());
      min_y = std::min(min_y, q.y() / q.z());
      max_x = std::max(max_x, q.x() / q.z());
      max_y = std::max(max_y, q.y() / q.z());
    }
  }
  // Extents within 1e-6 of an integer snap to it, so exact alignments do not
  // grow the canvas by a pixel.
  constexpr double snap = 1e-6;
  const double x0 = std::floor(min_x + snap), y0 = std::floor(min_y + snap);
  const double cw = std::ceil(max_x - snap) - x0 + 1, ch = std::ceil(max_y - snap) - y0 + 1;
  if (!(cw * ch <= kMaxCanvasPixels)) fail(ErrorCode::DegenerateGeometry, "mosaic canvas would be unreasonably large");
  const int width = static_cast<int>(cw), height = static_cast<int>(ch);
  mosaic.offset = Point2(x0, y0);
  mosaic.image = RasterImage(width, height, 3, blank_fill);
  mosaic.mask = RasterImage(width, height, 1, 0);

  // Later images overwrite earlier ones.
  for (std::size_t i = 0; i < n; ++i) {
    const RasterImage& img = images[i];
    const Mat3d inv = mosaic.to_reference[i].inverse().matrix();
    double bx0 = std::numeric_limits<double>::infinity(), by0 = bx0, bx1 = -bx0, by1 = -bx0;
    const double w = img.width() - 1, h = img.height() - 1;
    for (const Point2& corner : {Point2(0, 0), Point2(w, 0), Point2(w, h), Point2(0, h)}) {
      const Point2 q = mosaic.to_reference[i].apply(corner) - mosaic.offset;
      bx0 = std::min(bx0, q.x());
      by0 = std::min(by0, q.y());
      bx1 = std::max(bx1, q.x());
      by1 = std::max(by1, q.y());
    }
    const int xs = std::max(0, static_cast<int>(std::floor(bx0)));
    const int ys = std::max(0, static_cast<int>(std::floor(by0)));
    const int xe = std::min(width - 1, static_cast<int>(std::ceil(bx1)));
    const int ye = std::min(height - 1, static_cast<int>(std::ceil(by1)));
    for (int y = ys; y <= ye; ++y) {
      for (int x = xs; x <= xe; ++x) {
        const Eigen::Vector3d q = inv * Eigen::Vector3d(x + x0, y + y0, 1.0);
        const double sx = q.x() / q.z(), sy = q.y() / q.z();
        if (!(sx >= 0.0 && sy >= 0.0 && sx <= w && sy <= h)) continue;
        for (int c = 0; c < 3; ++c) mosaic.image.at(x, y, c) = bilinear(img, sx, sy, c);
        mosaic.mask.at(x, y) = 255;
      }
    }
  }
  return mosaic;
}

StitchResult stitch_images(std::span<const RasterImage> images, const StitchParams& params) {
  require(!images.empty(), ErrorCode::InvalidParameter, "stitching needs at least one image");
  std::vector<RasterImage> rgb;
  rgb.reserve(images.size());
  for (const RasterImage& img : images) rgb.push_back(img.channels() == 3 ? img : gray_to_rgb(img));

  std::vector<std::future<std::vector<Keypoint>>> jobs;
  for (const RasterImage& img : rgb) {
    jobs.push_back(std::async(std::launch::async, [&img, &params] { return detect_keypoints(to_gray(img), params.sift); }));
  }
  std::vector<std::vector<Keypoint>> keypoints;
  for (auto& j : jobs) keypoints.push_back(j.get());

  StitchResult result;
  for (const auto& k : keypoints) result.keypoint_counts.push_back(k.size());

  for (std::size_t i = 0; i < rgb.size(); ++i) {
    for (std::size_t j = i + 1; j < rgb.size(); ++j) {
      auto putative = match_descriptors(keypoints[i], keypoints[j], params.ratio);
      if (putative.size() < 4) continue;
      RansacHomographyOptions ro = params.ransac;
      ro.seed = params.ransac.seed ^ (0x9E3779B97F4A7C15ULL * (i * rgb.size() + j + 1));
      MatchSet ms;
      try {
        ms = estimate_homography_ransac(keypoints[i], keypoints[j], std::move(putative), ro);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateGeometry) throw;
        continue;
      }
      ms.image_a = i;
      ms.image_b = j;
      ms.verified = verify_match(ms, params.verify_alpha, params.verify_beta);
      result.pairs.push_back(std::move(ms));
    }
  }
  result.mosaic = compose_mosaic(rgb, result.pairs, params.blank_fill);
  return result;
}

namespace {
nlohmann::json matrix_json(const Homography& h) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({h.matrix()(r, 0), h.matrix()(r, 1), h.matrix()(r, 2)});
  return rows;
}
}  // namespace

nlohmann::json to_json(const StitchResult& result) {
  nlohmann::json j;
  j["reference"] = result.mosaic.reference;
  j["offset"] = {result.mosaic.offset.x(), result.mosaic.offset.y()};
  j["size"] = {result.mosaic.image.width(), result.mosaic.image.height()};
  j["keypoints"] = result.keypoint_counts;
  nlohmann::json to_ref = nlohmann::json::array();
  for (const Homography& h : result.mosaic.to_reference) to_ref.push_back(matrix_json(h));
  j["to_reference"] = to_ref;
  nlohmann::json pairs = nlohmann::json::array();
  for (const MatchSet& ms : result.pairs) {
    pairs.push_back({{"a", ms.image_a},
                     {"b", ms.image_b},
                     {"putative", ms.putative.size()},
                     {"inliers", ms.inlier_count()},
                     {"verified", ms.verified},
                     {"h", matrix_json(ms.h)}});
  }
  j["pairs"] = pairs;
  return j;
}

}  // namespace uavinspect
