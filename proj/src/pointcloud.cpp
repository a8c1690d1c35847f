#include "uavinspect/pointcloud.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "uavinspect/error.hpp"

namespace uavinspect {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == ',')) ++pos;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] != ' ' && s[pos] != '\t' && s[pos] != ',') ++pos;
    if (pos > start) fields.push_back(s.substr(start, pos - start));
  }
  return fields;
}

bool parse_double(std::string_view field, double& out) {
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

Vec3 parse_triplet(std::span<const std::string_view> fields, std::size_t line_no) {
  Vec3 p;
  if (fields.size() != 3) {
    fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 3 coordinates, found " +
                                    std::to_string(fields.size()));
  }
  for (int i = 0; i < 3; ++i) {
    if (!parse_double(fields[i], p[i])) {
      fail(ErrorCode::ParseError,
           "line " + std::to_string(line_no) + ": bad coordinate '" + std::string(fields[i]) + "'");
    }
  }
  return p;
}

}  // namespace

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  return RigidTransform{rotation * other.rotation, rotation * other.translation + translation};
}

RigidTransform RigidTransform::inverse() const {
  const Mat3 rt = rotation.transpose();
  return RigidTransform{rt, -(rt * translation)};
}

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back(t.apply(p));
  if (cloud.scan_origin) out.scan_origin = t.apply(*cloud.scan_origin);
  return out;
}

PointCloud parse_xyz(std::string_view text) {
  PointCloud cloud;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string_view body = trim(line.substr(1));
      constexpr std::string_view tag = "scan_origin";
      if (body.substr(0, tag.size()) == tag) {
        const auto fields = split_fields(body.substr(tag.size()));
        cloud.scan_origin = parse_triplet(fields, line_no);
      }
      continue;
    }
    const auto fields = split_fields(line);
    cloud.points.push_back(parse_triplet(fields, line_no));
  }
  return cloud;
}

PointCloud load_xyz(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_xyz(buffer.str());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) fail(ErrorCode::ParseError, path.string() + ": " + e.what());
    throw;
  }
}

void save_xyz(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(17);
  if (cloud.scan_origin) {
    const Vec3& o = *cloud.scan_origin;
    out << "# scan_origin " << o.x() << ' ' << o.y() << ' ' << o.z() << '\n';
  }
  for (const Vec3& p : cloud.points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

PointCloud remove_outliers(const PointCloud& cloud, std::size_t k, double alpha) {
  require(k >= 1, ErrorCode::InvalidParameter, "neighbour count must be at least 1");
  if (cloud.size() <= k) {
    fail(ErrorCode::TooFewPoints,
         "need more than " + std::to_string(k) + " points, got " + std::to_string(cloud.size()));
  }
  const SpatialHash hash(cloud.points, SpatialHash::suggest_cell_size(cloud.points, static_cast<double>(k)));
  std::vector<double> mean_dist(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = hash.k_nearest(cloud.points[i], k, i);
    double s = 0.0;
    for (const auto& n : nn) s += n.distance;
    mean_dist[i] = s / static_cast<double>(nn.size());
  }
  const double n = static_cast<double>(mean_dist.size());
  const double mu = std::accumulate(mean_dist.begin(), mean_dist.end(), 0.0) / n;
  double var = 0.0;
  for (double d : mean_dist) var += (d - mu) * (d - mu);
  const double limit = mu + alpha * std::sqrt(var / n);

  PointCloud out;
  out.scan_origin = cloud.scan_origin;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (mean_dist[i] <= limit) out.points.push_back(cloud.points[i]);
  }
  return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double leaf) {
  require(leaf > 0.0 && std::isfinite(leaf), ErrorCode::InvalidParameter, "leaf size must be positive");
  struct Acc {
    Vec3 sum = Vec3::Zero();
    std::size_t count = 0;
  };
  std::map<std::tuple<long long, long long, long long>, Acc> cells;
  for (const Vec3& p : cloud.points) {
    Acc& a = cells[{static_cast<long long>(std::floor(p.x() / leaf)),
                    static_cast<long long>(std::floor(p.y() / leaf)),
                    static_cast<long long>(std::floor(p.z() / leaf))}];
    a.sum += p;
    ++a.count;
  }
  PointCloud out;
  out.scan_origin = cloud.scan_origin;
  out.points.reserve(cells.size());
  for (const auto& [key, acc] : cells) {
    out.points.push_back(acc.count == 1 ? acc.sum : Vec3(acc.sum / static_cast<double>(acc.count)));
  }
  return out;
}

ClusterSet euclidean_cluster(const PointCloud& cloud, double epsilon) {
  require(epsilon > 0.0 && std::isfinite(epsilon), ErrorCode::InvalidParameter, "epsilon must be positive");
  ClusterSet result;
  result.epsilon = epsilon;
  if (cloud.empty()) return result;

  std::vector<std::size_t> parent(cloud.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  const SpatialHash hash(cloud.points, epsilon);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    hash.for_each_within(cloud.points[i], epsilon, [&](std::size_t j, double) {
      const std::size_t ri = find(i), rj = find(j);
      if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
    });
  }
  // Roots are the smallest index of each component, so clusters come out
  // ordered by their first member.
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::size_t r = find(i);
    auto [it, inserted] = slot.emplace(r, result.clusters.size());
    if (inserted) result.clusters.emplace_back();
    result.clusters[it->second].push_back(i);
  }
  return result;
}

nlohmann::json to_json(const SurfacePatch& patch) {
  nlohmann::json boundary = nlohmann::json::array();
  for (const Vec2& q : patch.boundary) boundary.push_back({q.x(), q.y()});
  const auto& m = patch.plane.coefficients;
  const auto& f = patch.frame;
  return {
      {"plane", {m[0], m[1], m[2], m[3]}},
      {"inlier_count", patch.plane.inliers.size()},
      {"inliers", patch.plane.inliers},
      {"frame",
       {{"origin", {f.origin.x(), f.origin.y(), f.origin.z()}},
        {"u", {f.u.x(), f.u.y(), f.u.z()}},
        {"v", {f.v.x(), f.v.y(), f.v.z()}}}},
      {"boundary", boundary},
  };
}

nlohmann::json to_json(const ClusterSet& clusters) {
  return {{"epsilon", clusters.epsilon}, {"clusters", clusters.clusters}};
}

namespace {
Vec3 vec3_from_json(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
}  // namespace

SurfacePatch surface_patch_from_json(const nlohmann::json& j) {
  try {
    SurfacePatch patch;
    const auto& m = j.at("plane");
    patch.plane.coefficients = Eigen::Vector4d(m.at(0).get<double>(), m.at(1).get<double>(),
                                               m.at(2).get<double>(), m.at(3).get<double>());
    if (j.contains("inliers")) patch.plane.inliers = j.at("inliers").get<std::vector<std::size_t>>();
    const auto& f = j.at("frame");
    patch.frame.origin = vec3_from_json(f.at("origin"));
    patch.frame.u = vec3_from_json(f.at("u"));
    patch.frame.v = vec3_from_json(f.at("v"));
    for (const auto& q : j.at("boundary")) patch.boundary.emplace_back(q.at(0).get<double>(), q.at(1).get<double>());
    return patch;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("surface patch: ") + e.what());
  }
}

ClusterSet cluster_set_from_json(const nlohmann::json& j) {
  try {
    ClusterSet c;
    c.epsilon = j.at("epsilon").get<double>();
    c.clusters = j.at("clusters").get<std::vector<std::vector<std::size_t>>>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("cluster set: ") + e.what());
  }
}

}  // namespace uavinspect
