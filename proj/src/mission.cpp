#include "uavinspect/mission.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>

#include "uavinspect/error.hpp"

namespace uavinspect {

VoxelGrid::VoxelGrid(const Vec3& origin, double resolution, std::array<int, 3> dims)
    : origin_(origin), resolution_(resolution), dims_(dims) {
  require(resolution > 0.0 && std::isfinite(resolution), ErrorCode::InvalidParameter,
          "voxel resolution must be positive");
  require(dims[0] >= 1 && dims[1] >= 1 && dims[2] >= 1, ErrorCode::InvalidParameter,
          "voxel grid dimensions must be positive");
  occupancy_.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
}

Voxel VoxelGrid::voxel_at(std::size_t index) const noexcept {
  const auto nx = static_cast<std::size_t>(dims_[0]);
  const auto ny = static_cast<std::size_t>(dims_[1]);
  return Voxel{static_cast<int>(index % nx), static_cast<int>((index / nx) % ny),
               static_cast<int>(index / (nx * ny))};
}

std::size_t VoxelGrid::occupied_count() const noexcept {
  return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), std::uint8_t{1}));
}

std::optional<Voxel> VoxelGrid::locate(const Vec3& p) const noexcept {
  std::array<int, 3> c{};
  for (int a = 0; a < 3; ++a) {
    const double f = (p[a] - origin_[a]) / resolution_;
    if (!(f >= 0.0)) return std::nullopt;
    int i = static_cast<int>(std::floor(f));
    if (i == dims_[a] && f <= static_cast<double>(dims_[a])) i = dims_[a] - 1;
    if (i >= dims_[a]) return std::nullopt;
    c[a] = i;
  }
  return Voxel{c[0], c[1], c[2]};
}

Vec3 VoxelGrid::center(const Voxel& v) const noexcept {
  return origin_ + resolution_ * Vec3(v.x + 0.5, v.y + 0.5, v.z + 0.5);
}

VoxelGrid build_voxel_grid(std::span<const Vec3> obstacles, const Bounds& bounds, double resolution,
                           int inflation) {
  require(resolution > 0.0, ErrorCode::InvalidParameter, "voxel resolution must be positive");
  require(inflation >= 0, ErrorCode::InvalidParameter, "inflation must be non-negative");
  require((bounds.max.array() >= bounds.min.array()).all(), ErrorCode::InvalidParameter,
          "bounds are inverted");
  std::array<int, 3> dims{};
  for (int a = 0; a < 3; ++a) {
    dims[a] = std::max(1, static_cast<int>(std::ceil((bounds.max[a] - bounds.min[a]) / resolution - 1e-9)));
  }
  VoxelGrid grid(bounds.min, resolution, dims);
  for (const Vec3& p : obstacles) {
    const auto v = bounds.contains(p) ? grid.locate(p) : std::nullopt;
    if (!v) {
      std::ostringstream msg;
      msg << "obstacle point (" << p.x() << ", " << p.y() << ", " << p.z() << ") lies outside the grid bounds";
      fail(ErrorCode::OutOfBounds, msg.str());
    }
    for (int dz = -inflation; dz <= inflation; ++dz)
      for (int dy = -inflation; dy <= inflation; ++dy)
        for (int dx = -inflation; dx <= inflation; ++dx) {
          const Voxel n{v->x + dx, v->y + dy, v->z + dz};
          if (grid.in_bounds(n)) grid.set_occupied(n);
        }
  }
  return grid;
}

void CameraModel::validate() const {
  require(focal_length_mm > 0 && sensor_width_mm > 0 && sensor_height_mm > 0 && pixel_cols > 0 &&
              pixel_rows > 0,
          ErrorCode::InvalidParameter, "camera parameters must all be positive");
}

double standoff_distance(const CameraModel& cam, double gsd_mm_per_px) {
  cam.validate();
  require(gsd_mm_per_px > 0.0, ErrorCode::InvalidParameter, "gsd must be positive");
  const double gsd_m = gsd_mm_per_px * 1e-3;
  return gsd_m * cam.focal_length_mm * cam.pixel_cols / cam.sensor_width_mm;
}

namespace {

// Smallest tile count whose centres, spaced at most `spacing` apart, cover an
// extent of `length` with tiles of size `footprint`.
int tile_count(double length, double footprint, double spacing) {
  if (length <= footprint + 1e-9) return 1;
  return static_cast<int>(std::ceil((length - footprint) / spacing - 1e-9)) + 1;
}

double tile_center(int i, int n, double lo, double hi, double footprint) {
  if (n == 1) return 0.5 * (lo + hi);
  return lo + 0.5 * footprint + i * ((hi - lo) - footprint) / (n - 1);
}

}  // namespace

std::vector<ShootingPose> generate_shooting_points(const SurfacePatch& patch, const CameraModel& cam,
                                                   double gsd_mm_per_px, double overlap) {
  require(overlap >= 0.0 && overlap < 1.0, ErrorCode::InvalidParameter, "overlap must lie in [0, 1)");
  const double d = standoff_distance(cam, gsd_mm_per_px);
  if (patch.boundary.size() < 3 || std::abs(polygon_area(patch.boundary)) <= 1e-12) {
    fail(ErrorCode::DegenerateGeometry, "surface patch has zero area");
  }
  const double fw = d * cam.sensor_width_mm / cam.focal_length_mm;
  const double fh = d * cam.sensor_height_mm / cam.focal_length_mm;

  Vec2 lo = patch.boundary.front(), hi = patch.boundary.front();
  for (const Vec2& q : patch.boundary) {
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  const int nu = tile_count(hi.x() - lo.x(), fw, fw * (1.0 - overlap));
  const int nv = tile_count(hi.y() - lo.y(), fh, fh * (1.0 - overlap));

  const Vec3 normal = patch.frame.u.cross(patch.frame.v).normalized();
  const Vec3 view = -normal;
  const double horiz = std::hypot(view.x(), view.y());
  const double yaw = horiz > 1e-9 ? std::atan2(view.y(), view.x()) : 0.0;

  std::vector<ShootingPose> poses;
  poses.reserve(static_cast<std::size_t>(nu) * nv);
  for (int r = 0; r < nv; ++r) {
    const double cv = tile_center(r, nv, lo.y(), hi.y(), fh);
    for (int c = 0; c < nu; ++c) {
      const int col = (r % 2 == 0) ? c : nu - 1 - c;
      const double cu = tile_center(col, nu, lo.x(), hi.x(), fw);
      ShootingPose pose;
      pose.footprint_center = Vec2(cu, cv);
      pose.footprint_width = fw;
      pose.footprint_height = fh;
      pose.position = patch.frame.lift(pose.footprint_center) + d * normal;
      pose.yaw = yaw;
      poses.push_back(pose);
    }
  }
  return poses;
}

void AStarWeights::validate() const {
  require(a1 >= 0 && a2 >= 0 && a3 >= 0, ErrorCode::InvalidParameter, "A* weights must be non-negative");
  require(a1 > 0 || a2 > 0 || a3 > 0, ErrorCode::InvalidParameter, "at least one A* weight must be positive");
}

double step_cost(int k, int l, int m, const AStarWeights& w) {
  auto unit = [](int c) { return c >= -1 && c <= 1; };
  if (!unit(k) || !unit(l) || !unit(m)) fail(ErrorCode::InvalidMove, "move offsets must lie in {-1, 0, 1}");
  if (k == 0 && l == 0 && m == 0) fail(ErrorCode::InvalidMove, "the zero move is not a step");
  return w.a1 * k * k + w.a2 * l * l + w.a3 * m * m;
}

GridPath astar(const VoxelGrid& grid, const Voxel& start, const Voxel& goal, const AStarWeights& w) {
  w.validate();
  if (!grid.in_bounds(start) || grid.occupied(start)) fail(ErrorCode::InvalidEndpoint, "start voxel is not free");
  if (!grid.in_bounds(goal) || grid.occupied(goal)) fail(ErrorCode::InvalidEndpoint, "goal voxel is not free");
  if (start == goal) return {};

  const double hmin = w.min();
  auto heuristic = [&](const Voxel& v) {
    const int cheb = std::max({std::abs(v.x - goal.x), std::abs(v.y - goal.y), std::abs(v.z - goal.z)});
    return hmin * cheb;
  };

  struct Entry {
    double f, h;
    Voxel v;
  };
  // Lowest f first, then lowest h, then lexicographic voxel order.
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.f != b.f) return a.f > b.f;
    if (a.h != b.h) return a.h > b.h;
    return a.v > b.v;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(grid.size(), inf);
  std::vector<std::int64_t> parent(grid.size(), -1);
  std::vector<std::uint8_t> closed(grid.size(), 0);

  g[grid.index(start)] = 0.0;
  open.push({heuristic(start), heuristic(start), start});
  bool reached = false;
  while (!open.empty()) {
    const Entry top = open.top();
    open.pop();
    const std::size_t ci = grid.index(top.v);
    if (closed[ci]) continue;
    closed[ci] = 1;
    if (top.v == goal) {
      reached = true;
      break;
    }
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const Voxel n{top.v.x + dx, top.v.y + dy, top.v.z + dz};
          if (!grid.in_bounds(n) || grid.occupied(n)) continue;
          const std::size_t ni = grid.index(n);
          if (closed[ni]) continue;
          const double cand = g[ci] + step_cost(dx, dy, dz, w);
          if (cand < g[ni]) {
            g[ni] = cand;
            parent[ni] = static_cast<std::int64_t>(ci);
            const double h = heuristic(n);
            open.push({cand + h, h, n});
          }
        }
  }
  if (!reached) fail(ErrorCode::Unreachable, "no free path between the voxels");

  GridPath path;
  path.cost = g[grid.index(goal)];
  for (std::int64_t at = static_cast<std::int64_t>(grid.index(goal)); at != static_cast<std::int64_t>(grid.index(start));
       at = parent[static_cast<std::size_t>(at)]) {
    path.steps.push_back(grid.voxel_at(static_cast<std::size_t>(at)));
  }
  std::reverse(path.steps.begin(), path.steps.end());
  return path;
}

MissionPlan plan_mission(std::span<const SurfacePatch> patches, std::span<const Vec3> obstacles,
                         const CameraModel& cam, double gsd_mm_per_px, double overlap,
                         const GridParams& params, const AStarWeights& w) {
  require(!patches.empty(), ErrorCode::InvalidParameter, "mission planning needs at least one surface patch");
  require(params.margin >= 0.0, ErrorCode::InvalidParameter, "grid margin must be non-negative");
  w.validate();

  std::vector<ShootingPose> poses;
  for (const SurfacePatch& patch : patches) {
    auto p = generate_shooting_points(patch, cam, gsd_mm_per_px, overlap);
    poses.insert(poses.end(), p.begin(), p.end());
  }

  Bounds bounds{poses.front().position, poses.front().position};
  for (const ShootingPose& p : poses) {
    bounds.min = bounds.min.cwiseMin(p.position);
    bounds.max = bounds.max.cwiseMax(p.position);
  }
  for (const Vec3& p : obstacles) {
    bounds.min = bounds.min.cwiseMin(p);
    bounds.max = bounds.max.cwiseMax(p);
  }
  bounds.min.array() -= params.margin;
  bounds.max.array() += params.margin;
  VoxelGrid grid = build_voxel_grid(obstacles, bounds, params.resolution, params.inflation);

  auto name = [&](std::size_t i) {
    std::ostringstream s;
    const Vec3& p = poses[i].position;
    s << "shooting pose #" << i << " at (" << p.x() << ", " << p.y() << ", " << p.z() << ")";
    return s.str();
  };

  std::vector<Voxel> cells;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto v = grid.locate(poses[i].position);
    if (!v || grid.occupied(*v)) fail(ErrorCode::Unreachable, name(i) + " lies in an occupied voxel");
    cells.push_back(*v);
  }

  FlightPath path;
  path.waypoints.push_back({poses[0].position, poses[0].yaw, WaypointKind::Shooting});
  for (std::size_t i = 1; i < poses.size(); ++i) {
    GridPath seg;
    try {
      seg = astar(grid, cells[i - 1], cells[i], w);
    } catch (const Error&) {
      fail(ErrorCode::Unreachable, name(i) + " cannot be reached from the previous pose");
    }
    for (std::size_t s = 0; s + 1 < seg.steps.size(); ++s) {
      path.waypoints.push_back({grid.center(seg.steps[s]), poses[i - 1].yaw, WaypointKind::Intermediate});
    }
    path.waypoints.push_back({poses[i].position, poses[i].yaw, WaypointKind::Shooting});
    path.total_cost += seg.cost;
  }
  return MissionPlan{std::move(path), std::move(poses), std::move(grid)};
}

FlightPath perturb_waypoints(const FlightPath& path, double sigma, double clip, std::uint64_t seed) {
  require(sigma >= 0.0 && clip >= 0.0, ErrorCode::InvalidParameter, "sigma and clip must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  FlightPath out = path;
  for (Waypoint& wp : out.waypoints) {
    Vec3 delta(noise(rng), noise(rng), noise(rng));
    const double len = delta.norm();
    if (len > clip) delta *= clip / len;
    wp.position += delta;
  }
  return out;
}

nlohmann::json waypoints_to_json(const FlightPath& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Waypoint& wp : path.waypoints) {
    arr.push_back({{"x", wp.position.x()},
                   {"y", wp.position.y()},
                   {"z", wp.position.z()},
                   {"yaw", wp.yaw},
                   {"kind", wp.kind == WaypointKind::Shooting ? "shooting" : "intermediate"}});
  }
  return arr;
}

FlightPath waypoints_from_json(const nlohmann::json& j) {
  if (!j.is_array()) fail(ErrorCode::ParseError, "waypoint document must be a JSON array");
  FlightPath path;
  try {
    for (const auto& e : j) {
      Waypoint wp;
      wp.position = Vec3(e.at("x").get<double>(), e.at("y").get<double>(), e.at("z").get<double>());
      wp.yaw = e.at("yaw").get<double>();
      const std::string kind = e.at("kind").get<std::string>();
      if (kind == "shooting") wp.kind = WaypointKind::Shooting;
      else if (kind == "intermediate") wp.kind = WaypointKind::Intermediate;
      else fail(ErrorCode::ParseError, "unknown waypoint kind '" + kind + "'");
      path.waypoints.push_back(wp);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("waypoint: ") + e.what());
  }
  return path;
}

void export_waypoints(const FlightPath& path, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) fail(ErrorCode::IoError, "cannot write " + file.string());
  out << waypoints_to_json(path).dump(2) << '\n';
  if (!out) fail(ErrorCode::IoError, "short write to " + file.string());
}

FlightPath import_waypoints(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::IoError, "cannot open " + file.string());
  try {
    return waypoints_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ParseError, file.string() + ": " + e.what());
  }
}

}  // namespace uavinspect
