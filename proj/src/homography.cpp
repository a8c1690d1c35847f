#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "uavinspect/error.hpp"
#include "uavinspect/stitch.hpp"

namespace uavinspect {

std::vector<Match> match_descriptors(std::span<const Keypoint> a, std::span<const Keypoint> b, double ratio) {
  require(ratio > 0.0 && ratio < 1.0, ErrorCode::InvalidParameter, "ratio must lie in (0, 1)");
  if (a.empty() || b.empty()) return {};

  using RowMat = Eigen::Matrix<float, Eigen::Dynamic, 128, Eigen::RowMajor>;
  RowMat da(a.size(), 128), db(b.size(), 128);
  for (std::size_t i = 0; i < a.size(); ++i) da.row(i) = Eigen::Map<const Eigen::Matrix<float, 1, 128>>(a[i].descriptor.data());
  for (std::size_t j = 0; j < b.size(); ++j) db.row(j) = Eigen::Map<const Eigen::Matrix<float, 1, 128>>(b[j].descriptor.data());
  const Eigen::VectorXf na = da.rowwise().squaredNorm();
  const Eigen::VectorXf nb = db.rowwise().squaredNorm();
  const Eigen::MatrixXf dots = da * db.transpose();

  auto dist = [&](std::size_t i, std::size_t j) {
    return std::sqrt(std::max(0.0, static_cast<double>(na[i]) + nb[j] - 2.0 * dots(i, j)));
  };

  std::vector<std::size_t> best_a_for_b(b.size(), 0);
  for (std::size_t j = 0; j < b.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = dist(i, j);
      if (d < best) {
        best = d;
        best_a_for_b[j] = i;
      }
    }
  }

  std::vector<Match> matches;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
    std::size_t j1 = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = dist(i, j);
      if (d < d1) {
        d2 = d1;
        d1 = d;
        j1 = j;
      } else if (d < d2) {
        d2 = d;
      }
    }
    if (!(d1 < ratio * d2)) continue;
    if (best_a_for_b[j1] != i) continue;
    matches.push_back({i, j1, d1});
  }
  return matches;
}

namespace {
// Scale-free singularity test.
bool well_conditioned(const Mat3d& m) {
  const double n = m.norm();
  return std::abs(m.determinant()) > 1e-12 * n * n * n;
}
}  // namespace

Homography::Homography(const Mat3d& m) : m_(m) {
  const double s = m(2, 2);
  require(std::abs(s) > 1e-15 && m.allFinite(), ErrorCode::DegenerateGeometry, "homography has H(2,2) == 0");
  m_ /= s;
  require(well_conditioned(m_), ErrorCode::DegenerateGeometry, "homography is singular");
}

Point2 Homography::apply(const Point2& p) const {
  const Eigen::Vector3d q = m_ * Eigen::Vector3d(p.x(), p.y(), 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

namespace {

// Similarity moving the centroid to the origin with mean distance sqrt(2).
std::optional<Mat3d> normaliser(std::span<const Correspondence> pairs, bool first) {
  Point2 c = Point2::Zero();
  for (const auto& p : pairs) c += first ? p.a : p.b;
  c /= static_cast<double>(pairs.size());
  double mean = 0.0;
  for (const auto& p : pairs) mean += ((first ? p.a : p.b) - c).norm();
  mean /= static_cast<double>(pairs.size());
  if (!(mean > 1e-12)) return std::nullopt;
  const double s = std::numbers::sqrt2 / mean;
  Mat3d t;
  t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return t;
}

bool collinear(const Point2& p, const Point2& q, const Point2& r, double scale) {
  const double cross = (q - p).x() * (r - p).y() - (q - p).y() * (r - p).x();
  return std::abs(cross) <= 1e-9 * scale * scale;
}

bool degenerate_sample(std::span<const Correspondence> s) {
  for (int side = 0; side < 2; ++side) {
    auto pt = [&](int i) { return side == 0 ? s[i].a : s[i].b; };
    double scale = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) scale = std::max(scale, (pt(i) - pt(j)).norm());
    if (!(scale > 0.0)) return true;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        for (int k = j + 1; k < 4; ++k)
          if (collinear(pt(i), pt(j), pt(k), scale)) return true;
  }
  return false;
}

}  // namespace

std::optional<Homography> fit_homography_dlt(std::span<const Correspondence> pairs) {
  if (pairs.size() < 4) return std::nullopt;
  const auto ta = normaliser(pairs, true);
  const auto tb = normaliser(pairs, false);
  if (!ta || !tb) return std::nullopt;

  Eigen::MatrixXd a(2 * pairs.size(), 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Vector3d p = *ta * Eigen::Vector3d(pairs[i].a.x(), pairs[i].a.y(), 1.0);
    const Eigen::Vector3d q = *tb * Eigen::Vector3d(pairs[i].b.x(), pairs[i].b.y(), 1.0);
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::Matrix<double, 9, 1> h;
  if (pairs.size() == 4) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    // A rank-deficient system (e.g. collinear points) has no unique solution.
    if (svd.singularValues()[7] <= 1e-9 * svd.singularValues()[0]) return std::nullopt;
    h = svd.matrixV().col(8);
  } else {
    // Normal equations are well conditioned after normalisation.
    const Eigen::Matrix<double, 9, 9> ata = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(ata);
    if (eig.eigenvalues()[1] <= 1e-18 * eig.eigenvalues()[8]) return std::nullopt;
    h = eig.eigenvectors().col(0);
  }
  Mat3d hn;
  hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  const Mat3d full = tb->inverse() * hn * *ta;
  if (!full.allFinite() || std::abs(full(2, 2)) < 1e-15) return std::nullopt;
  const Mat3d scaled = full / full(2, 2);
  if (!well_conditioned(scaled) || !well_conditioned(Mat3d(scaled.inverse() / scaled.inverse()(2, 2)))) {
    return std::nullopt;
  }
  return Homography(scaled);
}

double symmetric_transfer_error(const Homography& h, const Correspondence& c) {
  const Homography inv = h.inverse();
  return (h.apply(c.a) - c.b).norm() + (inv.apply(c.b) - c.a).norm();
}

std::size_t MatchSet::inlier_count() const {
  return static_cast<std::size_t>(std::count(inlier.begin(), inlier.end(), true));
}

namespace {

std::vector<bool> classify(const Homography& h, std::span<const Correspondence> pairs, double tol,
                           std::size_t& count) {
  const Homography inv = h.inverse();
  std::vector<bool> flags(pairs.size(), false);
  count = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double e = (h.apply(pairs[i].a) - pairs[i].b).norm() + (inv.apply(pairs[i].b) - pairs[i].a).norm();
    if (e <= tol) {
      flags[i] = true;
      ++count;
    }
  }
  return flags;
}

}  // namespace

MatchSet estimate_homography_ransac(std::span<const Correspondence> pairs, const RansacHomographyOptions& options) {
  if (pairs.size() < 4) {
    fail(ErrorCode::TooFewMatches, "homography needs at least 4 matches, got " + std::to_string(pairs.size()));
  }
  require(options.iterations >= 1 && options.inlier_tolerance > 0, ErrorCode::InvalidParameter,
          "invalid homography RANSAC options");

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  std::optional<Homography> best;
  std::size_t best_count = 0;
  std::array<Correspondence, 4> sample;
  for (int it = 0; it < options.iterations; ++it) {
    std::array<std::size_t, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      bool fresh = false;
      while (!fresh) {
        idx[k] = pick(rng);
        fresh = std::find(idx.begin(), idx.begin() + k, idx[k]) == idx.begin() + k;
      }
      sample[k] = pairs[idx[k]];
    }
    if (degenerate_sample(sample)) continue;
    const auto h = fit_homography_dlt(sample);
    if (!h) continue;
    std::size_t count = 0;
    classify(*h, pairs, options.inlier_tolerance, count);
    if (!best || count > best_count) {
      best = h;
      best_count = count;
    }
  }
  if (!best) fail(ErrorCode::DegenerateGeometry, "every homography sample was degenerate");

  std::size_t count = 0;
  std::vector<bool> flags = classify(*best, pairs, options.inlier_tolerance, count);
  // Refit on the consensus set while that does not lose support.
  for (int round = 0; round < 5 && count >= 4; ++round) {
    std::vector<Correspondence> support;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (flags[i]) support.push_back(pairs[i]);
    const auto refined = fit_homography_dlt(support);
    if (!refined) break;
    std::size_t refined_count = 0;
    auto refined_flags = classify(*refined, pairs, options.inlier_tolerance, refined_count);
    if (refined_count < count) break;
    const bool same = refined_flags == flags;
    best = refined;
    flags = std::move(refined_flags);
    count = refined_count;
    if (same) break;
  }

  // Trimmed refit: drop consensus members far above the median transfer error,
  // which keeps a few loosely localised points from tilting a narrow overlap.
  for (int round = 0; round < 3 && count >= 8; ++round) {
    std::vector<double> errs;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (flags[i]) errs.push_back(symmetric_transfer_error(*best, pairs[i]));
    std::vector<double> sorted = errs;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double cut = 3.0 * sorted[sorted.size() / 2];
    std::vector<Correspondence> core;
    std::size_t k = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (flags[i] && errs[k++] <= cut) core.push_back(pairs[i]);
    if (core.size() < 8 || core.size() == count) break;
    const auto refined = fit_homography_dlt(core);
    if (!refined) break;
    std::size_t refined_count = 0;
    auto refined_flags = classify(*refined, pairs, options.inlier_tolerance, refined_count);
    if (refined_count < core.size()) break;
    best = refined;
    flags = std::move(refined_flags);
    count = refined_count;
  }

  MatchSet ms;
  ms.h = *best;
  ms.inlier = std::move(flags);
  return ms;
}

MatchSet estimate_homography_ransac(std::span<const Keypoint> a, std::span<const Keypoint> b,
                                    std::vector<Match> putative, const RansacHomographyOptions& options) {
  std::vector<Correspondence> pairs;
  pairs.reserve(putative.size());
  for (const Match& m : putative) pairs.push_back({Point2(a[m.a].x, a[m.a].y), Point2(b[m.b].x, b[m.b].y)});
  MatchSet ms = estimate_homography_ransac(pairs, options);
  ms.putative = std::move(putative);
  return ms;
}

bool verify_match(const MatchSet& ms, double alpha, double beta) {
  const double putative = static_cast<double>(std::max(ms.putative.size(), ms.inlier.size()));
  return static_cast<double>(ms.inlier_count()) > alpha + beta * putative;
}

}  // namespace uavinspect
