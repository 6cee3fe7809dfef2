#include "attnorm/geometry.hpp"
#include "attnorm/spatial_index.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace attnorm;
using testing::Random;

namespace {

// Reference k-NN: full sort by (distance, index).
std::vector<std::size_t> sorted_prefix(const std::vector<Vec3>& pts, const Vec3& q, std::size_t k) {
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double da = (pts[a] - q).squaredNorm(), db = (pts[b] - q).squaredNorm();
    return da != db ? da < db : a < b;
  });
  idx.resize(k);
  return idx;
}

std::vector<std::size_t> indices_of(const std::vector<Neighbor>& n) {
  std::vector<std::size_t> out;
  for (const auto& x : n) out.push_back(x.index);
  return out;
}

}  // namespace

TEST_CASE("normalization of a symmetric pair") {
  PointCloud c;
  c.points = {{0, 0, 0}, {2, 0, 0}};
  const auto n = normalize_to_unit_sphere(c);
  CHECK(n.scale == doctest::Approx(1.0));
  CHECK((n.shift - Vec3(-1, 0, 0)).norm() < 1e-15);
  CHECK((n.cloud.points[0] - Vec3(-1, 0, 0)).norm() < 1e-15);
  CHECK((n.cloud.points[1] - Vec3(1, 0, 0)).norm() < 1e-15);
}

TEST_CASE("normalization leaves a centered unit cloud alone") {
  PointCloud c;
  c.points = {{1, 0, 0}, {-1, 0, 0}, {0, 0.5, 0}, {0, -0.5, 0}};
  c.normals = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
  const auto n = normalize_to_unit_sphere(c);
  CHECK(n.scale == 1.0);
  CHECK(n.shift.norm() == 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(n.cloud.points[i] == c.points[i]);
    CHECK(n.cloud.normals[i] == c.normals[i]);
  }
}

TEST_CASE("normalized box cloud has unit radius and zero mean") {
  Random rng(7);
  PointCloud c;
  c.points = rng.cloud(1000, -3.0, 5.0);
  for (auto& p : c.points) p.x() *= 4.0;
  const auto n = normalize_to_unit_sphere(c);
  Vec3 mean = Vec3::Zero();
  double max_norm = 0.0;
  for (const auto& p : n.cloud.points) {
    mean += p;
    max_norm = std::max(max_norm, p.norm());
  }
  mean /= 1000.0;
  CHECK(std::abs(max_norm - 1.0) < 1e-12);
  CHECK(mean.cwiseAbs().maxCoeff() < 1e-12);

  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK((n.to_raw(n.cloud.points[i]) - c.points[i]).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("normalization rejects an empty cloud") {
  CHECK_THROWS_WITH_AS(normalize_to_unit_sphere(PointCloud{}), "empty point cloud", Error);
  CHECK_THROWS_AS(SpatialIndex(std::vector<Vec3>{}), Error);
}

TEST_CASE("cloud validation") {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 0, 0}};
  c.normals = {{0, 0, 1}};
  CHECK_THROWS_AS(c.validate(), Error);
  c.normals = {{0, 0, 1}, {0, 0, 1.01}};
  CHECK_THROWS_AS(c.validate(), Error);
  c.normals = {{0, 0, 1}, {0, 1, 0}};
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("single-point index") {
  const SpatialIndex idx(std::vector<Vec3>{{0.3, -2, 1}});
  const auto r = idx.knn({5, 5, 5}, 1);
  REQUIRE(r.size() == 1);
  CHECK(r[0].index == 0);
  CHECK(idx.nearest({-1, 0, 0}).index == 0);
}

TEST_CASE("lattice center has its six axis neighbours") {
  std::vector<Vec3> pts;
  for (int x = -1; x <= 1; ++x)
    for (int y = -1; y <= 1; ++y)
      for (int z = -1; z <= 1; ++z) pts.emplace_back(x, y, z);
  const SpatialIndex idx(pts);
  const auto r = idx.knn({0, 0, 0}, 7);
  REQUIRE(r.size() == 7);
  CHECK(r[0].index == 13);
  CHECK(r[0].sq_distance == 0.0);
  std::vector<std::size_t> rest;
  for (std::size_t i = 1; i < 7; ++i) {
    CHECK(r[i].sq_distance == 1.0);
    rest.push_back(r[i].index);
  }
  // Equal distances come back in index order.
  CHECK(rest == std::vector<std::size_t>{4, 10, 12, 14, 16, 22});
}

TEST_CASE("k-d tree matches brute force on random clouds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Random rng(seed);
    const std::size_t n = 1 + rng.index(2000);
    const auto pts = rng.cloud(n);
    const SpatialIndex idx(pts);
    for (int q = 0; q < 25; ++q) {
      const std::size_t k = 1 + rng.index(std::min<std::size_t>(50, n));
      const Vec3 query = q % 2 == 0 ? pts[rng.index(n)] : rng.vec(-1.5, 1.5);
      const auto got = indices_of(idx.knn(query, k));
      CHECK(got == sorted_prefix(pts, query, k));
      CHECK(got == indices_of(brute_force_knn(pts, query, k)));
    }
  }
}

TEST_CASE("k-d tree resolves ties like a stable sort") {
  // Integer lattice with duplicates: many exactly equal distances.
  Random rng(3);
  std::vector<Vec3> pts;
  for (int i = 0; i < 600; ++i)
    pts.emplace_back(double(rng.index(5)), double(rng.index(5)), double(rng.index(3)));
  const SpatialIndex idx(pts);
  for (std::size_t a = 0; a < pts.size(); a += 7) {
    for (std::size_t k : {1u, 5u, 17u, 50u}) CHECK(indices_of(idx.knn(pts[a], k)) == sorted_prefix(pts, pts[a], k));
  }
}

TEST_CASE("knn over a large k returns every point") {
  Random rng(5);
  const auto pts = rng.cloud(40);
  const SpatialIndex idx(pts);
  const auto r = idx.knn({0, 0, 0}, 100);
  CHECK(r.size() == 40);
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i - 1].sq_distance <= r[i].sq_distance);
}

TEST_CASE("patch of size one is the query point") {
  Random rng(1);
  PointCloud c;
  c.points = rng.cloud(10);
  const SpatialIndex idx(c);
  const Patch p = extract_patch(c, idx, 4, 1);
  CHECK(p.neighbor_indices == std::vector<std::size_t>{4});
  CHECK(p.centered.rows() == 1);
  CHECK(p.centered.norm() == 0.0);
  CHECK(p.centroid == c.points[4]);
}

TEST_CASE("collinear patch") {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {10, 0, 0}};
  const SpatialIndex idx(c);
  const Patch p = extract_patch(c, idx, 1, 3);
  CHECK(p.neighbor_indices == std::vector<std::size_t>{1, 0, 2});
  CHECK(p.centroid.x() == doctest::Approx(1.0));
  CHECK(p.centered(0, 0) == doctest::Approx(0.0));
  CHECK(p.centered(1, 0) == doctest::Approx(-1.0));
  CHECK(p.centered(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("patch size limits") {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 0, 0}};
  const SpatialIndex idx(c);
  CHECK_THROWS_WITH_AS(extract_patch(c, idx, 0, 3), "k exceeds cloud size", Error);
  CHECK_THROWS_AS(extract_patch(c, idx, 0, 0), Error);
}

TEST_CASE("patches are centered, ordered and idempotent under centering") {
  Random rng(11);
  PointCloud c;
  c.points = rng.cloud(500, 2.0, 9.0);
  const SpatialIndex idx(c);
  for (std::size_t a = 0; a < 500; a += 13) {
    const Patch p = extract_patch(c, idx, a, 30);
    const Eigen::RowVector3d means = p.centered.colwise().mean();
    CHECK(means.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(p.neighbor_indices.front() == a);
    for (std::size_t i = 1; i < p.k(); ++i) {
      CHECK((c.points[p.neighbor_indices[i - 1]] - c.points[a]).norm() <=
            (c.points[p.neighbor_indices[i]] - c.points[a]).norm());
    }
    CHECK(p.neighbor_indices == sorted_prefix(c.points, c.points[a], 30));
    const PointMatrix again = center_rows(p.centered);
    CHECK((again - p.centered).cwiseAbs().maxCoeff() < 1e-12);
  }
}
