#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace uavinspect {

using Vec3 = Eigen::Vector3d;

// Uniform hash grid over a fixed point set. Radius queries visit only the
// cells a ball can touch; nearest-neighbour queries expand Chebyshev shells of
// cells until no unvisited cell can hold a closer point.
class SpatialHash {
 public:
  struct Neighbor {
    std::size_t index;
    double distance;
  };

  SpatialHash(std::span<const Vec3> points, double cell_size);

  // Cell edge giving roughly `per_cell` points per occupied cell, assuming
  // surface-like sampling (scanned clouds are).
  static double suggest_cell_size(std::span<const Vec3> points, double per_cell);

  double cell_size() const noexcept { return cell_; }
  std::size_t size() const noexcept { return points_.size(); }

  // Calls fn(index, distance) for every point with distance <= radius.
  template <typename Fn>
  void for_each_within(const Vec3& query, double radius, Fn&& fn) const {
    const int reach = static_cast<int>(std::ceil(radius / cell_));
    const Key center = key_of(query);
    for (std::int64_t dz = -reach; dz <= reach; ++dz)
      for (std::int64_t dy = -reach; dy <= reach; ++dy)
        for (std::int64_t dx = -reach; dx <= reach; ++dx) {
          auto it = cells_.find(Key{center.x + dx, center.y + dy, center.z + dz});
          if (it == cells_.end()) continue;
          for (std::size_t idx : it->second) {
            const double d = (points_[idx] - query).norm();
            if (d <= radius) fn(idx, d);
          }
        }
  }

  // Closest point; ties resolve to the smallest index. Empty set -> nullopt.
  std::optional<Neighbor> nearest(const Vec3& query) const;

  // The k closest points sorted by (distance, index), optionally skipping one
  // index (the query point itself).
  std::vector<Neighbor> k_nearest(const Vec3& query, std::size_t k,
                                  std::optional<std::size_t> exclude = std::nullopt) const;

 private:
  struct Key {
    std::int64_t x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
      h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
      h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
      return static_cast<std::size_t>(h);
    }
  };

  Key key_of(const Vec3& p) const noexcept {
    return Key{static_cast<std::int64_t>(std::floor(p.x() / cell_)),
               static_cast<std::int64_t>(std::floor(p.y() / cell_)),
               static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }

  template <typename Visit>
  void visit_shells(const Vec3& query, Visit&& visit) const;

  std::span<const Vec3> points_;
  double cell_;
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> cells_;
  Key min_key_{0, 0, 0};
  Key max_key_{0, 0, 0};
};

}  // namespace uavinspect
