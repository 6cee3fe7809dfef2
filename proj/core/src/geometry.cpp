#include "attnorm/geometry.hpp"

#include "attnorm/spatial_index.hpp"

#include <cmath>

namespace attnorm {

void PointCloud::validate() const {
  if (normals.empty()) return;
  if (normals.size() != points.size()) {
    throw Error("normal count " + std::to_string(normals.size()) + " does not match point count " +
                std::to_string(points.size()));
  }
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (std::abs(normals[i].norm() - 1.0) > 1e-6) {
      throw Error("normal " + std::to_string(i) + " is not unit length");
    }
  }
}

NormalizedCloud normalize_to_unit_sphere(const PointCloud& cloud) {
  if (cloud.empty()) throw Error("empty point cloud");

  Vec3 centroid = Vec3::Zero();
  for (const auto& p : cloud.points) centroid += p;
  centroid /= static_cast<double>(cloud.size());

  double max_norm = 0.0;
  for (const auto& p : cloud.points) max_norm = std::max(max_norm, (p - centroid).norm());

  NormalizedCloud out;
  out.shift = -centroid;
  out.scale = max_norm > 0.0 ? 1.0 / max_norm : 1.0;
  out.cloud.normals = cloud.normals;
  out.cloud.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.cloud.points.push_back(out.to_normalized(p));
  return out;
}

PointMatrix center_rows(const PointMatrix& raw, Vec3* centroid) {
  const Vec3 mean = raw.colwise().mean().transpose();
  if (centroid != nullptr) *centroid = mean;
  PointMatrix out = raw.rowwise() - mean.transpose();
  return out;
}

Patch extract_patch(const PointCloud& cloud, const SpatialIndex& index, std::size_t a, std::size_t k) {
  if (k == 0) throw Error("k must be positive");
  if (k > cloud.size() || k > index.size()) throw Error("k exceeds cloud size");
  if (a >= cloud.size()) throw Error("query index out of range");

  const auto neighbors = index.knn(cloud.points[a], k);
  Patch patch;
  patch.center_index = a;
  patch.neighbor_indices.reserve(k);
  PointMatrix raw(static_cast<Eigen::Index>(k), 3);
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    patch.neighbor_indices.push_back(neighbors[i].index);
    raw.row(static_cast<Eigen::Index>(i)) = cloud.points[neighbors[i].index].transpose();
  }
  patch.centered = center_rows(raw, &patch.centroid);
  return patch;
}

}  // namespace attnorm
