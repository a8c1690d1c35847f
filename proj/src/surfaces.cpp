#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "uavinspect/error.hpp"
#include "uavinspect/pointcloud.hpp"

namespace uavinspect {
namespace {

// Flips the plane so the origin lies on its negative side (d <= 0); planes
// through the origin get a normal whose dominant component is positive.
void orient(Eigen::Vector4d& m) {
  const Vec3 n = m.head<3>();
  bool flip = false;
  if (std::abs(m[3]) > 1e-12) {
    flip = m[3] > 0.0;
  } else {
    int dominant = 0;
    n.cwiseAbs().maxCoeff(&dominant);
    flip = n[dominant] < 0.0;
  }
  if (flip) m = -m;
}

std::vector<std::size_t> collect_inliers(const PointCloud& cloud, const Eigen::Vector4d& m, double tol) {
  std::vector<std::size_t> inliers;
  const Vec3 n = m.head<3>();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (std::abs(n.dot(cloud.points[i]) + m[3]) <= tol) inliers.push_back(i);
  }
  return inliers;
}

// Least-squares plane: normal is the eigenvector of the smallest eigenvalue
// of the inlier scatter matrix.
Eigen::Vector4d refit(const PointCloud& cloud, const std::vector<std::size_t>& idx) {
  Vec3 c = Vec3::Zero();
  for (std::size_t i : idx) c += cloud.points[i];
  c /= static_cast<double>(idx.size());
  Mat3 scatter = Mat3::Zero();
  for (std::size_t i : idx) {
    const Vec3 d = cloud.points[i] - c;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  const Vec3 n = eig.eigenvectors().col(0).normalized();
  Eigen::Vector4d m;
  m << n, -n.dot(c);
  return m;
}

}  // namespace

PlaneModel ransac_plane(const PointCloud& cloud, const RansacOptions& options) {
  if (cloud.size() < 3) {
    fail(ErrorCode::TooFewPoints, "plane fit needs at least 3 points, got " + std::to_string(cloud.size()));
  }
  require(options.iterations >= 1, ErrorCode::InvalidParameter, "RANSAC needs at least one iteration");
  require(options.distance_tolerance >= 0.0, ErrorCode::InvalidParameter, "distance tolerance must be >= 0");

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, cloud.size() - 1);
  const double tol = options.distance_tolerance;

  bool found = false;
  Eigen::Vector4d best_model;
  std::size_t best_count = 0;
  for (int it = 0; it < options.iterations; ++it) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    while (j == i) j = pick(rng);
    std::size_t k = pick(rng);
    while (k == i || k == j) k = pick(rng);

    const Vec3& p0 = cloud.points[i];
    const Vec3 e1 = cloud.points[j] - p0;
    const Vec3 e2 = cloud.points[k] - p0;
    const Vec3 cross = e1.cross(e2);
    const double norm = cross.norm();
    if (!(norm > 1e-12 * e1.norm() * e2.norm())) continue;

    const Vec3 n = cross / norm;
    const double d = -n.dot(p0);
    std::size_t count = 0;
    for (const Vec3& p : cloud.points) count += std::abs(n.dot(p) + d) <= tol ? 1 : 0;
    if (!found || count > best_count) {
      found = true;
      best_count = count;
      best_model << n, d;
    }
  }
  if (!found) fail(ErrorCode::DegenerateGeometry, "every RANSAC sample was collinear");

  PlaneModel plane;
  plane.coefficients = best_model;
  plane.inliers = collect_inliers(cloud, best_model, tol);
  if (plane.inliers.size() >= 3) {
    const Eigen::Vector4d refined = refit(cloud, plane.inliers);
    auto refined_inliers = collect_inliers(cloud, refined, tol);
    if (refined_inliers.size() >= plane.inliers.size()) {
      plane.coefficients = refined;
      plane.inliers = std::move(refined_inliers);
    }
  }
  orient(plane.coefficients);
  return plane;
}

PlaneFrame plane_frame(const PlaneModel& plane, const Vec3& anchor) {
  const Vec3 n = plane.normal();
  const Vec3 seed_axis = std::abs(n.dot(Vec3::UnitX())) > 0.9 ? Vec3::UnitY() : Vec3::UnitX();
  PlaneFrame f;
  f.u = (seed_axis - n.dot(seed_axis) * n).normalized();
  f.v = n.cross(f.u);
  f.origin = anchor - plane.signed_distance(anchor) * n;
  return f;
}

void face_toward(SurfacePatch& patch, const Vec3& viewpoint) {
  if (patch.plane.signed_distance(viewpoint) >= 0.0) return;
  patch.plane.coefficients = -patch.plane.coefficients;
  patch.frame.v = -patch.frame.v;
  for (Vec2& q : patch.boundary) q.y() = -q.y();
  std::reverse(patch.boundary.begin(), patch.boundary.end());
}

SurfaceExtraction extract_surfaces(const PointCloud& cloud, const SurfaceOptions& options) {
  SurfaceExtraction out;
  std::vector<std::size_t> remaining(cloud.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

  const std::size_t floor_count = std::max<std::size_t>(3, options.min_inliers);
  while (out.patches.size() < options.max_planes && remaining.size() >= floor_count) {
    PointCloud sub;
    sub.points.reserve(remaining.size());
    for (std::size_t i : remaining) sub.points.push_back(cloud.points[i]);

    RansacOptions ro = options.ransac;
    ro.seed = options.ransac.seed + 0x9E3779B97F4A7C15ULL * (out.patches.size() + 1);
    PlaneModel local = ransac_plane(sub, ro);
    if (local.inliers.size() < options.min_inliers) break;

    SurfacePatch patch;
    patch.plane.coefficients = local.coefficients;
    Vec3 centroid = Vec3::Zero();
    for (std::size_t li : local.inliers) {
      patch.plane.inliers.push_back(remaining[li]);
      centroid += sub.points[li];
    }
    centroid /= static_cast<double>(local.inliers.size());
    patch.frame = plane_frame(patch.plane, centroid);
    std::vector<Vec2> projected;
    projected.reserve(local.inliers.size());
    for (std::size_t li : local.inliers) projected.push_back(patch.frame.project(sub.points[li]));
    patch.boundary = convex_hull_2d(projected);

    std::vector<bool> taken(remaining.size(), false);
    for (std::size_t li : local.inliers) taken[li] = true;
    std::vector<std::size_t> next;
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      if (!taken[k]) next.push_back(remaining[k]);
    }
    remaining = std::move(next);
    out.patches.push_back(std::move(patch));
  }

  out.residual.scan_origin = cloud.scan_origin;
  out.residual_indices = remaining;
  for (std::size_t i : remaining) out.residual.points.push_back(cloud.points[i]);
  return out;
}

std::vector<Vec2> convex_hull_2d(std::span<const Vec2> input) {
  if (input.size() < 3) fail(ErrorCode::DegenerateGeometry, "convex hull needs at least 3 points");
  std::vector<Vec2> pts(input.begin(), input.end());
  auto lex = [](const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); };
  std::sort(pts.begin(), pts.end(), lex);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  // Andrew's monotone chain; popping on cross <= 0 drops collinear vertices.
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 0 ? k - 1 : 0);
  if (hull.size() < 3) fail(ErrorCode::DegenerateGeometry, "all hull input points are collinear");
  return hull;
}

double polygon_area(std::span<const Vec2> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[(i + 1) % polygon.size()];
    twice += a.x() * b.y() - a.y() * b.x();
  }
  return 0.5 * twice;
}

}  // namespace uavinspect
