#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace attnorm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
/// k x 3 coordinate block, one point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Ordered point set with optional per-point unit normals.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }

  /// Throws Error when normals are present with the wrong count or are not unit length (1e-6).
  void validate() const;
};

/// Result of unit-sphere normalization: `normalized = (raw + shift) * scale`.
struct NormalizedCloud {
  PointCloud cloud;
  double scale = 1.0;
  Vec3 shift = Vec3::Zero();

  Vec3 to_raw(const Vec3& p) const { return p / scale - shift; }
  Vec3 to_normalized(const Vec3& p) const { return (p + shift) * scale; }
};

/// Centers on the centroid, then scales so the farthest point has norm 1.
/// Normals are carried through unchanged.
NormalizedCloud normalize_to_unit_sphere(const PointCloud& cloud);

/// The k nearest neighbours of a query point, mean-centered.
///
/// The query point is its own nearest neighbour (distance 0) and therefore
/// appears in the patch; with ties broken by ascending point index the rows
/// are ordered nearest-first.
struct Patch {
  std::size_t center_index = 0;
  std::vector<std::size_t> neighbor_indices;
  PointMatrix centered;  // k x 3, raw coords minus centroid
  Vec3 centroid = Vec3::Zero();

  std::size_t k() const { return neighbor_indices.size(); }
};

class SpatialIndex;

/// Builds the patch of `k` nearest neighbours around point `a`.
/// Throws Error("k exceeds cloud size") when k > |cloud| and on k == 0.
Patch extract_patch(const PointCloud& cloud, const SpatialIndex& index, std::size_t a, std::size_t k);

/// Mean-centers an arbitrary k x 3 block; returns the subtracted centroid through `centroid`.
PointMatrix center_rows(const PointMatrix& raw, Vec3* centroid = nullptr);

}  // namespace attnorm
