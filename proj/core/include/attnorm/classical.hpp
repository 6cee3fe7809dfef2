#pragma once

#include "attnorm/geometry.hpp"

#include <array>

namespace attnorm {

/// Symmetric 3x3 matrix stored as its six independent entries.
struct Sym3 {
  double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;

  static Sym3 from_matrix(const Mat3& m);
  Mat3 to_matrix() const;
  double trace() const { return xx + yy + zz; }
};

/// Eigenvalues ascending; eigenvectors[i] pairs with eigenvalues[i].
struct EigenDecomp3 {
  Vec3 eigenvalues = Vec3::Zero();
  std::array<Vec3, 3> eigenvectors{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
};

/// Coefficients of h(u, v) = c0 + c1 u + c2 v + c3 u^2 + c4 uv + c5 v^2 in `frame`
/// (frame[2] is the height axis).
struct JetCoeffs {
  std::array<double, 6> c{};
  std::array<Vec3, 3> frame{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
};

/// Population covariance (divisor k) of the patch's centered coordinates. Requires k >= 3.
Sym3 covariance(const Patch& patch);
Sym3 covariance(const PointMatrix& centered);

/// Cyclic Jacobi eigen-decomposition. Each eigenvector is signed so that its
/// largest-magnitude component is positive (first such component on ties).
EigenDecomp3 eigh3(const Sym3& m);

/// Smallest-eigenvalue eigenvector of the patch covariance (unoriented).
Vec3 pca_normal(const Patch& patch);
/// `coordinate_scale` is the magnitude of the raw coordinates before centering; a
/// covariance below (1e-14 * coordinate_scale)^2 counts as all-coincident.
Vec3 pca_normal(const PointMatrix& centered, double coordinate_scale = 1.0);

/// Order-2 jet fit in the PCA frame; returns the normal of the fitted height
/// function at the query point (row 0 of the patch). Requires k >= 6.
Vec3 jet_normal(const Patch& patch);
Vec3 jet_normal(const PointMatrix& centered, double coordinate_scale = 1.0, JetCoeffs* coeffs = nullptr);

}  // namespace attnorm
