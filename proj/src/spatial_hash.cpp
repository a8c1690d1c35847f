#include "uavinspect/spatial_hash.hpp"

#include <algorithm>
#include <limits>

#include "uavinspect/error.hpp"

namespace uavinspect {

SpatialHash::SpatialHash(std::span<const Vec3> points, double cell_size)
    : points_(points), cell_(cell_size) {
  require(cell_size > 0.0 && std::isfinite(cell_size), ErrorCode::InvalidParameter,
          "hash cell size must be positive");
  bool first = true;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Key k = key_of(points_[i]);
    cells_[k].push_back(i);
    if (first) {
      min_key_ = max_key_ = k;
      first = false;
    } else {
      min_key_ = Key{std::min(min_key_.x, k.x), std::min(min_key_.y, k.y), std::min(min_key_.z, k.z)};
      max_key_ = Key{std::max(max_key_.x, k.x), std::max(max_key_.y, k.y), std::max(max_key_.z, k.z)};
    }
  }
}

double SpatialHash::suggest_cell_size(std::span<const Vec3> points, double per_cell) {
  if (points.empty()) return 1.0;
  Vec3 lo = points.front(), hi = points.front();
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = std::max((hi - lo).maxCoeff(), 1e-9);
  double cell = extent / std::max(1.0, std::cbrt(static_cast<double>(points.size())));
  std::unordered_map<Key, int, KeyHash> seen;
  for (const Vec3& p : points) {
    seen.emplace(Key{static_cast<std::int64_t>(std::floor(p.x() / cell)),
                     static_cast<std::int64_t>(std::floor(p.y() / cell)),
                     static_cast<std::int64_t>(std::floor(p.z() / cell))},
                 0);
  }
  const double mean_per_cell = static_cast<double>(points.size()) / static_cast<double>(seen.size());
  cell *= std::clamp(std::sqrt(per_cell / mean_per_cell), 0.05, 20.0);
  return std::max(cell, 1e-9);
}

// Visits cells shell by shell. `take(idx, d)` receives candidates, `bound()`
// reports the distance that must be beaten for the search to stay open, and
// `reset()` clears the accumulator before a brute-force fallback pass.
template <typename Visit>
void SpatialHash::visit_shells(const Vec3& query, Visit&& visit) const {
  if (points_.empty()) return;
  const Key c = key_of(query);
  const std::int64_t max_ring =
      std::max({std::abs(c.x - min_key_.x), std::abs(c.x - max_key_.x), std::abs(c.y - min_key_.y),
                std::abs(c.y - max_key_.y), std::abs(c.z - min_key_.z), std::abs(c.z - max_key_.z)});
  for (std::int64_t r = 0; r <= max_ring; ++r) {
    const std::int64_t side = 2 * r + 1;
    const std::int64_t inner = r > 0 ? 2 * r - 1 : 0;
    const std::int64_t shell_cells = side * side * side - inner * inner * inner;
    if (shell_cells > static_cast<std::int64_t>(cells_.size())) {
      visit.reset();
      for (std::size_t i = 0; i < points_.size(); ++i) visit.take(i, (points_[i] - query).norm());
      return;
    }
    for (std::int64_t dz = -r; dz <= r; ++dz)
      for (std::int64_t dy = -r; dy <= r; ++dy)
        for (std::int64_t dx = -r; dx <= r; ++dx) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
          auto it = cells_.find(Key{c.x + dx, c.y + dy, c.z + dz});
          if (it == cells_.end()) continue;
          for (std::size_t idx : it->second) visit.take(idx, (points_[idx] - query).norm());
        }
    // Anything outside shells 0..r is at least r cells away.
    if (visit.bound() < static_cast<double>(r) * cell_) return;
  }
}

std::optional<SpatialHash::Neighbor> SpatialHash::nearest(const Vec3& query) const {
  struct Best {
    std::optional<Neighbor> best;
    void reset() { best.reset(); }
    void take(std::size_t idx, double d) {
      if (!best || d < best->distance || (d == best->distance && idx < best->index)) {
        best = Neighbor{idx, d};
      }
    }
    double bound() const { return best ? best->distance : std::numeric_limits<double>::infinity(); }
  } visitor;
  visit_shells(query, visitor);
  return visitor.best;
}

std::vector<SpatialHash::Neighbor> SpatialHash::k_nearest(const Vec3& query, std::size_t k,
                                                          std::optional<std::size_t> exclude) const {
  struct KBest {
    std::size_t k;
    std::optional<std::size_t> exclude;
    std::vector<Neighbor> best;
    static bool less(const Neighbor& a, const Neighbor& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
    }
    void reset() { best.clear(); }
    void take(std::size_t idx, double d) {
      if (exclude && *exclude == idx) return;
      const Neighbor n{idx, d};
      if (best.size() == k && !less(n, best.back())) return;
      best.insert(std::upper_bound(best.begin(), best.end(), n, less), n);
      if (best.size() > k) best.pop_back();
    }
    double bound() const {
      return best.size() < k ? std::numeric_limits<double>::infinity() : best.back().distance;
    }
  } visitor{k, exclude, {}};
  if (k == 0) return {};
  visit_shells(query, visitor);
  return visitor.best;
}

}  // namespace uavinspect
