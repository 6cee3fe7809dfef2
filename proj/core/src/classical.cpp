#include "attnorm/classical.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace attnorm {
namespace {

constexpr int kMaxSweeps = 64;
constexpr double kOffDiagTol = 1e-14;
constexpr double kJetDamping = 1e-12;

Vec3 canonical_sign(Vec3 v) {
  int arg = 0;
  double best = -1.0;
  for (int i = 0; i < 3; ++i) {
    // strict '>' keeps the first component among equal magnitudes
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  }
  if (v[arg] < 0) v = -v;
  return v;
}

// Any unit vector orthogonal to n.
Vec3 any_orthogonal(const Vec3& n) {
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return n.cross(helper).normalized();
}

}  // namespace

Sym3 Sym3::from_matrix(const Mat3& m) {
  return {m(0, 0), m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2)};
}

Mat3 Sym3::to_matrix() const {
  Mat3 m;
  m << xx, xy, xz, xy, yy, yz, xz, yz, zz;
  return m;
}

Sym3 covariance(const PointMatrix& centered) {
  const auto k = centered.rows();
  if (k < 3) throw Error("degenerate patch");
  Sym3 c;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double x = centered(i, 0), y = centered(i, 1), z = centered(i, 2);
    c.xx += x * x;
    c.xy += x * y;
    c.xz += x * z;
    c.yy += y * y;
    c.yz += y * z;
    c.zz += z * z;
  }
  const double inv = 1.0 / static_cast<double>(k);
  c.xx *= inv;
  c.xy *= inv;
  c.xz *= inv;
  c.yy *= inv;
  c.yz *= inv;
  c.zz *= inv;
  return c;
}

Sym3 covariance(const Patch& patch) { return covariance(patch.centered); }

EigenDecomp3 eigh3(const Sym3& m) {
  Mat3 a = m.to_matrix();
  Mat3 v = Mat3::Identity();

  const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double off = std::sqrt(a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2));
    if (off <= kOffDiagTol * scale) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that annihilates a(p, q) (Golub & Van Loan, sym.schur2).
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        Mat3 rot = Mat3::Identity();
        rot(p, p) = c;
        rot(q, q) = c;
        rot(p, q) = s;
        rot(q, p) = -s;
        a = rot.transpose() * a * rot;
        a(p, q) = a(q, p) = 0.0;
        v = v * rot;
      }
    }
  }

  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });
  EigenDecomp3 out;
  for (int i = 0; i < 3; ++i) {
    out.eigenvalues[i] = a(order[i], order[i]);
    out.eigenvectors[i] = canonical_sign(v.col(order[i]).normalized());
  }
  return out;
}

Vec3 pca_normal(const PointMatrix& centered, double coordinate_scale) {
  const Sym3 cov = covariance(centered);
  const auto eig = eigh3(cov);
  // All points coincident (up to centroid rounding): no direction is preferred.
  const double floor = 1e-14 * coordinate_scale;
  if (!(eig.eigenvalues[2] > floor * floor)) throw Error("degenerate patch");
  return eig.eigenvectors[0];
}

Vec3 pca_normal(const Patch& patch) { return pca_normal(patch.centered, 1.0 + patch.centroid.norm()); }

Vec3 jet_normal(const PointMatrix& centered, double coordinate_scale, JetCoeffs* coeffs) {
  const auto k = centered.rows();
  if (k < 6) throw Error("insufficient points for order-2 jet");

  const Vec3 w = pca_normal(centered, coordinate_scale);
  const Vec3 u = any_orthogonal(w);
  const Vec3 v = w.cross(u);

  const Vec3 query = centered.row(0).transpose();
  double radius = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    radius = std::max(radius, (centered.row(i).transpose() - query).norm());
  }
  if (!(radius > 0.0)) throw Error("degenerate jet fit");

  // Fit in coordinates scaled by the patch radius; first-order coefficients are scale-free.
  Eigen::Matrix<double, 6, 6> ata = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> atb = Eigen::Matrix<double, 6, 1>::Zero();
  for (Eigen::Index i = 0; i < k; ++i) {
    const Vec3 d = (centered.row(i).transpose() - query) / radius;
    const double x = d.dot(u), y = d.dot(v), z = d.dot(w);
    Eigen::Matrix<double, 6, 1> row;
    row << 1.0, x, y, x * x, x * y, y * y;
    ata.selfadjointView<Eigen::Lower>().rankUpdate(row);
    atb += row * z;
  }
  ata = ata.selfadjointView<Eigen::Lower>();
  ata.diagonal().array() += kJetDamping;

  const Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(ata);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-11) throw Error("degenerate jet fit");
  const Eigen::Matrix<double, 6, 1> c = ldlt.solve(atb);

  if (coeffs != nullptr) {
    // Report coefficients in unscaled coordinates.
    coeffs->c = {c[0] * radius, c[1], c[2], c[3] / radius, c[4] / radius, c[5] / radius};
    coeffs->frame = {u, v, w};
  }
  return canonical_sign((-c[1] * u - c[2] * v + w).normalized());
}

Vec3 jet_normal(const Patch& patch) { return jet_normal(patch.centered, 1.0 + patch.centroid.norm()); }

}  // namespace attnorm
