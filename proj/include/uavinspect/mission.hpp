#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavinspect/pointcloud.hpp"

namespace uavinspect {

struct Voxel {
  int x = 0, y = 0, z = 0;
  auto operator<=>(const Voxel&) const = default;
};

struct Bounds {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

class VoxelGrid {
 public:
  VoxelGrid(const Vec3& origin, double resolution, std::array<int, 3> dims);

  const Vec3& origin() const noexcept { return origin_; }
  double resolution() const noexcept { return resolution_; }
  const std::array<int, 3>& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return occupancy_.size(); }

  bool in_bounds(const Voxel& v) const noexcept {
    return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < dims_[0] && v.y < dims_[1] && v.z < dims_[2];
  }
  std::size_t index(const Voxel& v) const noexcept {
    return (static_cast<std::size_t>(v.z) * dims_[1] + v.y) * dims_[0] + v.x;
  }
  Voxel voxel_at(std::size_t index) const noexcept;
  bool occupied(const Voxel& v) const noexcept { return occupancy_[index(v)] != 0; }
  void set_occupied(const Voxel& v, bool occ = true) noexcept { occupancy_[index(v)] = occ ? 1 : 0; }
  std::size_t occupied_count() const noexcept;

  // Voxel holding p; points on the upper boundary land in the last voxel.
  std::optional<Voxel> locate(const Vec3& p) const noexcept;
  Vec3 center(const Voxel& v) const noexcept;

 private:
  Vec3 origin_;
  double resolution_;
  std::array<int, 3> dims_;
  std::vector<std::uint8_t> occupancy_;
};

VoxelGrid build_voxel_grid(std::span<const Vec3> obstacles, const Bounds& bounds, double resolution,
                           int inflation);

struct CameraModel {
  double focal_length_mm = 34.4;
  double sensor_width_mm = 6.17;
  double sensor_height_mm = 4.63;
  int pixel_cols = 4000;
  int pixel_rows = 3000;

  void validate() const;
};

struct ShootingPose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;             // radians, heading that faces the surface
  Vec2 footprint_center = Vec2::Zero();  // in the patch frame
  double footprint_width = 0.0;  // metres along the frame u axis
  double footprint_height = 0.0; // metres along the frame v axis
};

// Standoff distance in metres for a ground sample distance in mm/pixel.
double standoff_distance(const CameraModel& cam, double gsd_mm_per_px);

// Poses along the patch normal, laid out boustrophedon: rows advance along v,
// each row sweeps along u, alternating direction.
std::vector<ShootingPose> generate_shooting_points(const SurfacePatch& patch, const CameraModel& cam,
                                                   double gsd_mm_per_px, double overlap);

struct AStarWeights {
  double a1 = 1.0, a2 = 1.0, a3 = 1.0;
  void validate() const;
  double min() const { return std::min({a1, a2, a3}); }
};

double step_cost(int k, int l, int m, const AStarWeights& w);

struct GridPath {
  std::vector<Voxel> steps;  // voxels after the start, ending at the goal
  double cost = 0.0;
};

GridPath astar(const VoxelGrid& grid, const Voxel& start, const Voxel& goal, const AStarWeights& w);

enum class WaypointKind { Shooting, Intermediate };

struct Waypoint {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
  WaypointKind kind = WaypointKind::Intermediate;
  bool operator==(const Waypoint&) const = default;
};

struct FlightPath {
  std::vector<Waypoint> waypoints;
  double total_cost = 0.0;
};

struct GridParams {
  double resolution = 0.25;  // metres
  int inflation = 1;         // voxels
  double margin = 2.0;       // metres of free space around poses and obstacles
};

struct MissionPlan {
  FlightPath path;
  std::vector<ShootingPose> poses;
  VoxelGrid grid;
};

MissionPlan plan_mission(std::span<const SurfacePatch> patches, std::span<const Vec3> obstacles,
                         const CameraModel& cam, double gsd_mm_per_px, double overlap,
                         const GridParams& grid, const AStarWeights& w);

// Gaussian position noise per waypoint; displacement length clipped at `clip`.
FlightPath perturb_waypoints(const FlightPath& path, double sigma, double clip, std::uint64_t seed);

nlohmann::json waypoints_to_json(const FlightPath& path);
FlightPath waypoints_from_json(const nlohmann::json& j);
void export_waypoints(const FlightPath& path, const std::filesystem::path& file);
FlightPath import_waypoints(const std::filesystem::path& file);

}  // namespace uavinspect
