#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "uavinspect/spatial_hash.hpp"

namespace uavinspect {

using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

struct PointCloud {
  std::vector<Vec3> points;
  // Scanner position the cloud was recorded from, when known.
  std::optional<Vec3> scan_origin;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  // (this ∘ other)(p) = this(other(p))
  RigidTransform compose(const RigidTransform& other) const;
  RigidTransform inverse() const;
};

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& t);

struct PlaneModel {
  // a, b, c form a unit normal; a*x + b*y + c*z + d = 0.
  Eigen::Vector4d coefficients = Eigen::Vector4d(0, 0, 1, 0);
  std::vector<std::size_t> inliers;

  Vec3 normal() const { return coefficients.head<3>(); }
  double offset() const { return coefficients[3]; }
  double signed_distance(const Vec3& p) const { return normal().dot(p) + offset(); }
};

// Origin plus two orthonormal in-plane axes; the plane normal is u x v.
struct PlaneFrame {
  Vec3 origin = Vec3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();

  Vec2 project(const Vec3& p) const { return {u.dot(p - origin), v.dot(p - origin)}; }
  Vec3 lift(const Vec2& q) const { return origin + q.x() * u + q.y() * v; }
};

struct SurfacePatch {
  PlaneModel plane;
  PlaneFrame frame;
  std::vector<Vec2> boundary;  // counter-clockwise convex polygon in frame coordinates
};

struct ClusterSet {
  double epsilon = 0.0;
  std::vector<std::vector<std::size_t>> clusters;
};

struct IndexPair {
  std::size_t a;
  std::size_t b;
  bool operator==(const IndexPair&) const = default;
};

// ---- input -----------------------------------------------------------------

// ASCII "x y z" per line. '#' lines are comments, except "# scan_origin x y z"
// which sets PointCloud::scan_origin.
PointCloud load_xyz(const std::filesystem::path& path);
PointCloud parse_xyz(std::string_view text);
void save_xyz(const PointCloud& cloud, const std::filesystem::path& path);

// ---- registration ----------------------------------------------------------

// Pairs (i, j) whose scanner-relative positions differ by less than tau; each
// i keeps its nearest qualifying j (smallest j on ties).
std::vector<IndexPair> find_overlap(const PointCloud& a, const PointCloud& b, double tau);

struct IcpOptions {
  int max_iterations = 50;
  double tolerance = 1e-10;  // stop once RMS improves by less than this
  // When > 0 and both clouds carry a scan origin, only source points with an
  // overlap partner take part, and those pairs seed the first iteration.
  double overlap_tau = 0.0;
};

struct IcpResult {
  RigidTransform transform;  // maps source into the target frame
  double rms = 0.0;
  int iterations = 0;
  std::vector<double> rms_history;  // correspondence RMS before each fit, then final
};

IcpResult icp_register(const PointCloud& source, const PointCloud& target, const IcpOptions& options = {});

// Kabsch fit of src onto dst (equal-length, paired by index).
RigidTransform fit_rigid(std::span<const Vec3> src, std::span<const Vec3> dst);

// ---- filtering -------------------------------------------------------------

PointCloud remove_outliers(const PointCloud& cloud, std::size_t k, double alpha);
PointCloud voxel_downsample(const PointCloud& cloud, double leaf);

// ---- surfaces --------------------------------------------------------------

struct RansacOptions {
  int iterations = 500;
  double distance_tolerance = 0.02;
  std::uint64_t seed = 1;
};

PlaneModel ransac_plane(const PointCloud& cloud, const RansacOptions& options);

struct SurfaceOptions {
  std::size_t min_inliers = 200;
  std::size_t max_planes = 4;
  RansacOptions ransac;
};

struct SurfaceExtraction {
  std::vector<SurfacePatch> patches;  // inlier indices refer to the input cloud
  PointCloud residual;
  std::vector<std::size_t> residual_indices;
};

SurfaceExtraction extract_surfaces(const PointCloud& cloud, const SurfaceOptions& options);

PlaneFrame plane_frame(const PlaneModel& plane, const Vec3& anchor);

// Flips the patch (plane, frame and boundary) so its normal points at
// `viewpoint`; the boundary stays counter-clockwise.
void face_toward(SurfacePatch& patch, const Vec3& viewpoint);

std::vector<Vec2> convex_hull_2d(std::span<const Vec2> points);
double polygon_area(std::span<const Vec2> polygon);

ClusterSet euclidean_cluster(const PointCloud& cloud, double epsilon);

// ---- serialization ---------------------------------------------------------

nlohmann::json to_json(const SurfacePatch& patch);
nlohmann::json to_json(const ClusterSet& clusters);
SurfacePatch surface_patch_from_json(const nlohmann::json& j);
ClusterSet cluster_set_from_json(const nlohmann::json& j);

}  // namespace uavinspect
