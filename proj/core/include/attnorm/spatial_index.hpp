#pragma once

#include "attnorm/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace attnorm {

struct Neighbor {
  std::size_t index = 0;
  double sq_distance = 0.0;
};

/// Exact k-d tree over a fixed point set.
///
/// Immutable after construction; queries are const and may run concurrently.
/// Results are ordered by (squared distance, point index), so equal distances
/// resolve to the lower index and results match a brute-force stable sort.
class SpatialIndex {
public:
  explicit SpatialIndex(std::vector<Vec3> points);
  explicit SpatialIndex(const PointCloud& cloud) : SpatialIndex(cloud.points) {}

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

  /// k nearest points to `query`, nearest first. k is clamped to size().
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

  Neighbor nearest(const Vec3& query) const;

private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, int depth);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

/// Brute-force reference used by tests and tiny clouds.
std::vector<Neighbor> brute_force_knn(const std::vector<Vec3>& points, const Vec3& query, std::size_t k);

}  // namespace attnorm
