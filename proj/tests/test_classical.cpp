#include "attnorm/classical.hpp"
#include "attnorm/spatial_index.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace attnorm;
using testing::line_angle_deg;
using testing::Random;
using testing::rows;

namespace {

Patch patch_of(const std::vector<Vec3>& pts) {
  Patch p;
  for (std::size_t i = 0; i < pts.size(); ++i) p.neighbor_indices.push_back(i);
  p.centered = center_rows(rows(pts), &p.centroid);
  return p;
}

Mat3 random_symmetric(Random& rng, double scale = 1.0) {
  Mat3 a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = rng.uniform(-scale, scale);
  return 0.5 * (a + a.transpose());
}

// Sphere cap around `axis`: the first point is the query, the rest are the
// nearest of a dense random sampling.
std::vector<Vec3> sphere_cap(Random& rng, const Vec3& axis, std::size_t k, double spread) {
  std::vector<Vec3> pts{axis.normalized()};
  while (pts.size() < k) {
    const Vec3 p = (axis.normalized() + spread * rng.vec()).normalized();
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

TEST_CASE("covariance of the four axis points") {
  const Sym3 c = covariance(patch_of({{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}}));
  CHECK(c.xx == doctest::Approx(0.5));
  CHECK(c.yy == doctest::Approx(0.5));
  CHECK(c.zz == 0.0);
  CHECK(c.xy == 0.0);
  CHECK(c.xz == 0.0);
  CHECK(c.yz == 0.0);
}

TEST_CASE("covariance matches a naive outer-product sum") {
  Random rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = rng.cloud(50, -3, 3);
    const Patch p = patch_of(pts);
    Vec3 mean = Vec3::Zero();
    for (const auto& x : pts) mean += x;
    mean /= 50.0;
    double ref[3][3] = {};
    for (const auto& x : pts) {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) ref[i][j] += (x[i] - mean[i]) * (x[j] - mean[j]);
    }
    const Mat3 got = covariance(p).to_matrix();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(std::abs(got(i, j) - ref[i][j] / 50.0) < 1e-12);
    const auto e = eigh3(covariance(p));
    CHECK(e.eigenvalues.minCoeff() >= -1e-12);
  }
}

TEST_CASE("covariance needs three points") {
  CHECK_THROWS_WITH_AS(covariance(patch_of({{0, 0, 0}, {1, 0, 0}})), "degenerate patch", Error);
}

TEST_CASE("eigh3 on identity and diagonal matrices") {
  const auto id = eigh3(Sym3::from_matrix(Mat3::Identity()));
  CHECK((id.eigenvalues - Vec3::Ones()).norm() < 1e-15);

  Mat3 d = Vec3(3, 1, 2).asDiagonal();
  const auto e = eigh3(Sym3::from_matrix(d));
  CHECK((e.eigenvalues - Vec3(1, 2, 3)).norm() < 1e-15);
  CHECK((e.eigenvectors[0] - Vec3::UnitY()).norm() < 1e-15);
  CHECK((e.eigenvectors[1] - Vec3::UnitZ()).norm() < 1e-15);
  CHECK((e.eigenvectors[2] - Vec3::UnitX()).norm() < 1e-15);
}

TEST_CASE("eigh3 reconstructs random symmetric matrices") {
  Random rng(9);
  for (int trial = 0; trial < 2000; ++trial) {
    const double scale = std::pow(10.0, rng.uniform(-6, 6));
    Mat3 m = random_symmetric(rng, scale);
    if (trial % 4 == 1) {
      // Nearly repeated eigenvalues.
      const Mat3 r = rng.rotation();
      m = r * Vec3(1.0, 1.0 + 1e-10, rng.uniform(-2, 2)).asDiagonal() * r.transpose() * scale;
    }
    const auto e = eigh3(Sym3::from_matrix(m));
    Mat3 recon = Mat3::Zero();
    for (int i = 0; i < 3; ++i) recon += e.eigenvalues[i] * e.eigenvectors[i] * e.eigenvectors[i].transpose();
    const double norm = std::max(m.norm(), 1e-300);
    CHECK((recon - m).norm() / norm < 1e-8);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(e.eigenvectors[i].norm() - 1.0) < 1e-12);
      CHECK((m * e.eigenvectors[i] - e.eigenvalues[i] * e.eigenvectors[i]).norm() / norm < 1e-8);
      for (int j = i + 1; j < 3; ++j) CHECK(std::abs(e.eigenvectors[i].dot(e.eigenvectors[j])) < 1e-8);
    }
    CHECK(e.eigenvalues[0] <= e.eigenvalues[1]);
    CHECK(e.eigenvalues[1] <= e.eigenvalues[2]);
    CHECK(std::abs(e.eigenvalues.sum() - m.trace()) <= 1e-10 * std::max(1.0, m.cwiseAbs().sum()));
  }
}

TEST_CASE("eigenvector sign convention") {
  Random rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto e = eigh3(Sym3::from_matrix(random_symmetric(rng)));
    for (const auto& v : e.eigenvectors) {
      Eigen::Index i = 0;
      v.cwiseAbs().maxCoeff(&i);
      CHECK(v[i] > 0.0);
    }
  }
}

TEST_CASE("PCA normal of planar patches") {
  const Vec3 n = pca_normal(patch_of({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}));
  CHECK(line_angle_deg(n, Vec3::UnitZ()) < 1e-9);
  CHECK(std::abs(n.norm() - 1.0) < 1e-12);

  // Eight points on a unit circle in x + y + z = 0.
  const Vec3 u = Vec3(1, -1, 0).normalized();
  const Vec3 v = Vec3(1, 1, -2).normalized();
  std::vector<Vec3> circle;
  for (int i = 0; i < 8; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 8.0;
    circle.push_back(std::cos(t) * u + std::sin(t) * v);
  }
  const Vec3 m = pca_normal(patch_of(circle));
  CHECK((m - Vec3(1, 1, 1).normalized()).norm() < 1e-8);
}

TEST_CASE("PCA normal on a sphere cap") {
  Random rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 axis = rng.unit();
    const auto cap = sphere_cap(rng, axis, 20, 0.1);
    // The estimate stays inside the cone spanned by the patch's own analytic normals.
    double widest = 0.0;
    for (const auto& q : cap) widest = std::max(widest, line_angle_deg(q, axis));
    CHECK(line_angle_deg(pca_normal(patch_of(cap)), axis) < widest);
  }
}

TEST_CASE("PCA rejects coincident points") {
  CHECK_THROWS_WITH_AS(pca_normal(patch_of({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {1, 2, 3}})), "degenerate patch", Error);
  CHECK_THROWS_WITH_AS(pca_normal(patch_of({{1, 2, 3}, {0, 0, 0}})), "degenerate patch", Error);
}

TEST_CASE("jet normal on a plane agrees with PCA") {
  Random rng(6);
  const Vec3 n = rng.unit();
  const Vec3 a = n.unitOrthogonal();
  const Vec3 b = n.cross(a);
  std::vector<Vec3> pts;
  for (int i = 0; i < 20; ++i) pts.push_back(rng.uniform(-1, 1) * a + rng.uniform(-1, 1) * b);
  const Patch p = patch_of(pts);
  CHECK(std::acos(std::min(1.0, std::abs(jet_normal(p).dot(pca_normal(p))))) < 1e-6);
}

TEST_CASE("jet normal at a paraboloid apex") {
  // A symmetric grid keeps the PCA frame on the z axis, so the quadratic fit is exact.
  std::vector<Vec3> pts{{0, 0, 0}};
  for (int i = -2; i <= 2; ++i) {
    for (int j = -2; j <= 2; ++j) {
      const double x = 0.1 * i, y = 0.1 * j;
      if (i != 0 || j != 0) pts.emplace_back(x, y, x * x + y * y);
    }
  }
  JetCoeffs coeffs;
  const Vec3 n = jet_normal(rows(pts).rowwise() - rows(pts).colwise().mean(), 1.0, &coeffs);
  CHECK(line_angle_deg(n, Vec3::UnitZ()) < 1e-6);
  CHECK(std::abs(std::abs(coeffs.c[3]) - 1.0) < 1e-8);
  CHECK(std::abs(coeffs.c[4]) < 1e-8);
  CHECK(std::abs(std::abs(coeffs.c[5]) - 1.0) < 1e-8);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(coeffs.frame[i].dot(coeffs.frame[j]) - (i == j ? 1.0 : 0.0)) < 1e-8);
    }
  }

  // Random samples tilt the frame; the jet still beats PCA at the apex.
  Random rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3> r{{0, 0, 0}};
    for (int i = 0; i < 24; ++i) {
      const double x = rng.uniform(-0.2, 0.2), y = rng.uniform(0.0, 0.3);
      r.emplace_back(x, y, x * x + y * y);
    }
    const Patch p = patch_of(r);
    CHECK(line_angle_deg(jet_normal(p), Vec3::UnitZ()) < line_angle_deg(pca_normal(p), Vec3::UnitZ()));
  }
}

TEST_CASE("jet normal on a sphere cap is at least as good as PCA") {
  Random rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 axis = rng.unit();
    const auto cap = sphere_cap(rng, axis, 30, 0.2);
    const Patch p = patch_of(cap);
    const double jet_err = line_angle_deg(jet_normal(p), axis);
    const double pca_err = line_angle_deg(pca_normal(p), axis);
    CHECK(jet_err <= pca_err + 0.5);
  }
}

TEST_CASE("jet preconditions") {
  CHECK_THROWS_WITH_AS(jet_normal(patch_of({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0.1}, {2, 0, 0}})),
                       "insufficient points for order-2 jet", Error);
  // Six points on two lines cannot determine a quadratic height function.
  CHECK_THROWS_WITH_AS(
      jet_normal(patch_of({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0}, {1, 1, 0}, {2, 1, 0}})), "degenerate jet fit",
      Error);
}

TEST_CASE("estimators are rotation equivariant, translation and scale invariant") {
  Random rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 axis = rng.unit();
    auto pts = sphere_cap(rng, axis, 25, 0.3);
    for (auto& p : pts) p += 0.01 * rng.vec();
    const Patch base = patch_of(pts);
    const Vec3 pca = pca_normal(base);
    const Vec3 jet = jet_normal(base);

    const Mat3 r = rng.rotation();
    std::vector<Vec3> rotated, shifted, scaled;
    const Vec3 offset = rng.vec(-50, 50);
    const double s = std::pow(10.0, rng.uniform(-3, 3));
    for (const auto& p : pts) {
      rotated.push_back(r * p);
      shifted.push_back(p + offset);
      scaled.push_back(s * p);
    }
    CHECK(1.0 - std::abs(pca_normal(patch_of(rotated)).dot(r * pca)) < 1e-12);
    CHECK(1.0 - std::abs(jet_normal(patch_of(rotated)).dot(r * jet)) < 1e-12);
    CHECK((pca_normal(patch_of(shifted)) - pca).norm() < 1e-9);
    CHECK((jet_normal(patch_of(shifted)) - jet).norm() < 1e-9);
    CHECK(1.0 - std::abs(pca_normal(patch_of(scaled)).dot(pca)) < 1e-12);
    CHECK(1.0 - std::abs(jet_normal(patch_of(scaled)).dot(jet)) < 1e-12);
  }
}
