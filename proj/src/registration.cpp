#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "uavinspect/error.hpp"
#include "uavinspect/pointcloud.hpp"

namespace uavinspect {

std::vector<IndexPair> find_overlap(const PointCloud& a, const PointCloud& b, double tau) {
  if (!a.scan_origin || !b.scan_origin) fail(ErrorCode::MissingOrigin, "overlap search needs both scan origins");
  require(tau > 0.0 && std::isfinite(tau), ErrorCode::InvalidParameter, "tau must be positive");

  std::vector<Vec3> rel_b;
  rel_b.reserve(b.size());
  for (const Vec3& p : b.points) rel_b.push_back(p - *b.scan_origin);
  const SpatialHash hash(rel_b, tau);

  std::vector<IndexPair> pairs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec3 q = a.points[i] - *a.scan_origin;
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    hash.for_each_within(q, tau, [&](std::size_t j, double d) {
      if (d >= tau) return;
      if (d < best_d || (d == best_d && j < best)) {
        best = j;
        best_d = d;
      }
    });
    if (std::isfinite(best_d)) pairs.push_back({i, best});
  }
  return pairs;
}

RigidTransform fit_rigid(std::span<const Vec3> src, std::span<const Vec3> dst) {
  require(src.size() == dst.size(), ErrorCode::DimensionMismatch, "correspondence lists differ in length");
  if (src.size() < 3) fail(ErrorCode::DegenerateGeometry, "rigid fit needs at least 3 correspondences");

  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= static_cast<double>(src.size());
  cd /= static_cast<double>(dst.size());

  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) cov += (src[i] - cs) * (dst[i] - cd).transpose();

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0]) {
    fail(ErrorCode::DegenerateGeometry, "correspondence covariance has rank < 2");
  }
  Mat3 v = svd.matrixV();
  const Mat3& u = svd.matrixU();
  if ((v * u.transpose()).determinant() < 0.0) v.col(2) *= -1.0;

  RigidTransform t;
  t.rotation = v * u.transpose();
  t.translation = cd - t.rotation * cs;
  return t;
}

IcpResult icp_register(const PointCloud& source, const PointCloud& target, const IcpOptions& options) {
  if (source.empty() || target.empty()) fail(ErrorCode::TooFewPoints, "ICP needs two non-empty clouds");
  require(options.max_iterations >= 1, ErrorCode::InvalidParameter, "max_iterations must be >= 1");

  std::vector<std::size_t> members;
  std::vector<std::size_t> seed;
  if (options.overlap_tau > 0.0 && source.scan_origin && target.scan_origin) {
    for (const IndexPair& p : find_overlap(source, target, options.overlap_tau)) {
      members.push_back(p.a);
      seed.push_back(p.b);
    }
    if (members.empty()) fail(ErrorCode::DegenerateGeometry, "scans share no overlapping points");
  } else {
    members.resize(source.size());
    for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
  }

  const SpatialHash hash(target.points, SpatialHash::suggest_cell_size(target.points, 4.0));
  std::vector<Vec3> moved(members.size());
  std::vector<Vec3> matched(members.size());

  // Applies `t` to the member points and pairs them (with the seed pairs on
  // the first pass); returns the correspondence RMS.
  auto correspond = [&](const RigidTransform& t, bool use_seed) {
    double sq = 0.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      moved[k] = t.apply(source.points[members[k]]);
      matched[k] = use_seed ? target.points[seed[k]] : target.points[hash.nearest(moved[k])->index];
      sq += (moved[k] - matched[k]).squaredNorm();
    }
    return std::sqrt(sq / static_cast<double>(members.size()));
  };

  IcpResult result;
  RigidTransform current;
  double previous = std::numeric_limits<double>::infinity();
  RigidTransform previous_transform;
  bool settled = false;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double rms = correspond(current, iter == 0 && !seed.empty());
    if (rms > previous) {
      // Floating-point noise near the optimum; keep the better state.
      current = previous_transform;
      settled = true;
      break;
    }
    result.rms_history.push_back(rms);
    result.iterations = iter;
    if (previous - rms < options.tolerance) {
      settled = true;
      break;
    }
    previous = rms;
    previous_transform = current;
    current = fit_rigid(moved, matched).compose(current);
  }
  if (!settled) {
    const double rms = correspond(current, false);
    if (rms > result.rms_history.back()) {
      current = previous_transform;
    } else {
      result.rms_history.push_back(rms);
    }
    result.iterations = options.max_iterations;
  }
  result.transform = current;
  result.rms = result.rms_history.back();
  return result;
}

}  // namespace uavinspect
