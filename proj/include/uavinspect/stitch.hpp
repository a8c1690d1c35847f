#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "uavinspect/imaging.hpp"

namespace uavinspect {

using Mat3d = Eigen::Matrix3d;
using Point2 = Eigen::Vector2d;

struct Keypoint {
  double x = 0.0, y = 0.0;   // image pixels, pixel centres at integer coordinates
  double scale = 0.0;        // blur sigma in image pixels
  double orientation = 0.0;  // radians
  double response = 0.0;     // |DoG| at the refined extremum
  std::array<float, 128> descriptor{};
};

struct SiftParams {
  int scales_per_octave = 3;
  double sigma = 1.6;
  double assumed_blur = 0.5;
  double contrast_threshold = 0.03;  // fraction of the intensity range
  double edge_ratio = 10.0;
  int max_octaves = 0;               // 0 = as many as the image size allows
  bool upsample = true;              // start from a 2x enlarged image
};

std::vector<Keypoint> detect_keypoints(const RasterImage& gray, const SiftParams& params = {});

struct Match {
  std::size_t a = 0, b = 0;
  double distance = 0.0;
  bool operator==(const Match&) const = default;
};

// Ratio test (d1 < ratio * d2) plus mutual-best filtering.
std::vector<Match> match_descriptors(std::span<const Keypoint> a, std::span<const Keypoint> b, double ratio);

// 3x3 projective map normalised so H(2,2) == 1.
class Homography {
 public:
  Homography() = default;
  explicit Homography(const Mat3d& m);

  const Mat3d& matrix() const noexcept { return m_; }
  Point2 apply(const Point2& p) const;
  Homography inverse() const;
  Homography operator*(const Homography& rhs) const { return Homography(m_ * rhs.m_); }

 private:
  Mat3d m_ = Mat3d::Identity();
};

struct Correspondence {
  Point2 a;
  Point2 b;
};

// Direct linear transform with isotropic (Hartley) normalisation; at least 4
// correspondences, least squares beyond that.
std::optional<Homography> fit_homography_dlt(std::span<const Correspondence> pairs);

// |H a - b| + |H^-1 b - a|
double symmetric_transfer_error(const Homography& h, const Correspondence& c);

struct MatchSet {
  std::size_t image_a = 0, image_b = 0;
  std::vector<Match> putative;
  std::vector<bool> inlier;
  Homography h;  // maps image_a coordinates to image_b coordinates
  bool verified = false;

  std::size_t inlier_count() const;
};

struct RansacHomographyOptions {
  int iterations = 2000;
  double inlier_tolerance = 2.0;  // pixels, symmetric transfer error
  std::uint64_t seed = 1;
};

MatchSet estimate_homography_ransac(std::span<const Correspondence> pairs, const RansacHomographyOptions& options);
MatchSet estimate_homography_ransac(std::span<const Keypoint> a, std::span<const Keypoint> b,
                                    std::vector<Match> putative, const RansacHomographyOptions& options);

bool verify_match(const MatchSet& ms, double alpha = 8.0, double beta = 0.3);

struct Mosaic {
  RasterImage image;  // 3 channels
  RasterImage mask;   // 255 where some input image contributed, 0 for blank fill
  std::size_t reference = 0;
  std::vector<Homography> to_reference;  // image i -> reference image coordinates
  Point2 offset = Point2::Zero();        // canvas (0,0) in reference coordinates
};

Mosaic compose_mosaic(std::span<const RasterImage> images, std::span<const MatchSet> matches,
                      std::uint8_t blank_fill = 0);

struct StitchParams {
  SiftParams sift;
  double ratio = 0.8;
  RansacHomographyOptions ransac;
  double verify_alpha = 8.0;
  double verify_beta = 0.3;
  std::uint8_t blank_fill = 0;
};

struct StitchResult {
  Mosaic mosaic;
  std::vector<std::size_t> keypoint_counts;
  std::vector<MatchSet> pairs;  // every pair with enough putative matches
};

// Detection and pairwise matching run per image / per pair in parallel.
StitchResult stitch_images(std::span<const RasterImage> images, const StitchParams& params);

nlohmann::json to_json(const StitchResult& result);

}  // namespace uavinspect
