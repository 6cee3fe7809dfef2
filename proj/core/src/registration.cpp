#include "attnorm/registration.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>
#include <numbers>

namespace attnorm {
namespace {

void require_pairs(const std::vector<Correspondence>& pairs) {
  if (pairs.empty()) throw Error("no correspondences");
}

// Minimum-norm solution of the symmetric PSD system A x = b; directions with
// eigenvalues below a relative floor are left untouched.
Vec6 solve_psd(const Eigen::Matrix<double, 6, 6>& a, const Vec6& b) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(a);
  const Vec6& evals = es.eigenvalues();
  const double floor = 1e-12 * std::max(evals.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const Vec6 projected = es.eigenvectors().transpose() * b;
  Vec6 scaled = Vec6::Zero();
  for (int i = 0; i < 6; ++i) {
    if (evals[i] > floor) scaled[i] = projected[i] / evals[i];
  }
  return es.eigenvectors() * scaled;
}

}  // namespace

std::vector<Vec3> RigidTransform::apply(const std::vector<Vec3>& xs) const {
  std::vector<Vec3> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(apply(x));
  return out;
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  return {rotation * other.rotation, rotation * other.translation + translation};
}

RigidTransform RigidTransform::inverse() const {
  const Mat3 rt = rotation.transpose();
  return {rt, -(rt * translation)};
}

RigidTransform RigidTransform::updated(const Vec6& delta) const {
  const Mat3 step = so3_exp(delta.head<3>());
  return {orthonormalize(step * rotation), step * translation + delta.tail<3>()};
}

Mat3 orthonormalize(const Mat3& r) {
  const Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

Mat3 so3_exp(const Vec3& omega) {
  const double angle = omega.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

RigidTransform make_perturbation(const Vec3& angles_deg, const Vec3& translation) {
  const Vec3 rad = angles_deg * (std::numbers::pi / 180.0);
  const Mat3 rx = Eigen::AngleAxisd(rad.x(), Vec3::UnitX()).toRotationMatrix();
  const Mat3 ry = Eigen::AngleAxisd(rad.y(), Vec3::UnitY()).toRotationMatrix();
  const Mat3 rz = Eigen::AngleAxisd(rad.z(), Vec3::UnitZ()).toRotationMatrix();
  return {rz * ry * rx, translation};
}

double point_to_point_energy(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                             const std::vector<Correspondence>& pairs) {
  require_pairs(pairs);
  double e = 0.0;
  for (const auto& [s, d] : pairs) e += (src.at(s) - dst.at(d)).squaredNorm();
  return e;
}

double point_to_plane_energy(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                             const std::vector<Vec3>& dst_normals, const std::vector<Correspondence>& pairs,
                             const RigidTransform& transform) {
  require_pairs(pairs);
  double e = 0.0;
  for (const auto& [s, d] : pairs) {
    const double r = dst_normals.at(d).dot(transform.apply(src.at(s)) - dst.at(d));
    e += r * r;
  }
  return e;
}

std::vector<Correspondence> find_correspondences(const std::vector<Vec3>& src, const SpatialIndex& dst_index) {
  if (src.empty()) throw Error("empty source cloud");
  std::vector<Correspondence> pairs;
  pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) pairs.emplace_back(i, dst_index.nearest(src[i]).index);
  return pairs;
}

PlaneResiduals plane_residuals(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                               const std::vector<Vec3>& dst_normals, const std::vector<Correspondence>& pairs,
                               const RigidTransform& transform) {
  require_pairs(pairs);
  PlaneResiduals out;
  const auto n = static_cast<Eigen::Index>(pairs.size());
  out.r.resize(n);
  out.jacobian.resize(n, 6);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& [s, d] = pairs[static_cast<std::size_t>(j)];
    const Vec3 y = transform.apply(src.at(s));
    const Vec3& normal = dst_normals.at(d);
    out.r[j] = normal.dot(y - dst.at(d));
    // d/d omega of n . (Exp(omega) y) at 0 is (y x n); d/d tau is n.
    out.jacobian.row(j).head<3>() = y.cross(normal).transpose();
    out.jacobian.row(j).tail<3>() = normal.transpose();
  }
  return out;
}

LmStep lm_solve_step(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                     const std::vector<Vec3>& dst_normals, const std::vector<Correspondence>& pairs,
                     const RigidTransform& transform, double damping, const LmSettings& settings) {
  if (pairs.size() < 6) throw Error("at least 6 correspondences are required");
  const auto res = plane_residuals(src, dst, dst_normals, pairs, transform);
  const Eigen::Matrix<double, 6, 6> jtj = res.jacobian.transpose() * res.jacobian;
  const Vec6 jtr = res.jacobian.transpose() * res.r;

  LmStep step;
  step.transform = transform;
  step.energy_before = res.r.squaredNorm();
  step.energy_after = step.energy_before;
  step.damping = damping;
  if (jtr.isZero(0.0)) {
    step.accepted = true;
    return step;
  }

  double lambda = damping;
  for (std::uint32_t attempt = 0; attempt <= settings.max_retries; ++attempt) {
    Eigen::Matrix<double, 6, 6> a = jtj;
    a.diagonal() += lambda * jtj.diagonal();
    const Vec6 delta = solve_psd(a, -jtr);
    if (!delta.allFinite()) throw Error("solver stalled");
    const RigidTransform candidate = transform.updated(delta);
    const double energy = point_to_plane_energy(src, dst, dst_normals, pairs, candidate);
    if (energy < step.energy_before) {
      step.delta = delta;
      step.transform = candidate;
      step.energy_after = energy;
      step.accepted = true;
      step.damping = lambda * settings.damping_down;
      return step;
    }
    lambda *= settings.damping_up;
    if (lambda > settings.max_damping) break;
  }
  step.damping = lambda;
  return step;
}

void IcpConfig::validate() const {
  if (!(stop_threshold > 0.0)) throw Error("stop threshold must be positive");
  if (max_iterations < 1) throw Error("max_iterations must be at least 1");
  if (!(lm_damping_init > 0.0) || !(lm_damping_up > 1.0) || !(lm_damping_down > 0.0) || !(lm_damping_down < 1.0)) {
    throw Error("invalid LM damping schedule");
  }
  if (inner_max_iterations < 1) throw Error("inner_max_iterations must be at least 1");
}

IcpResult icp(const std::vector<Vec3>& src, const std::vector<Vec3>& dst, const std::vector<Vec3>& dst_normals,
              const IcpConfig& cfg, const RigidTransform& initial) {
  cfg.validate();
  if (src.empty() || dst.empty()) throw Error("empty point cloud");
  if (dst_normals.size() != dst.size()) throw Error("destination normals missing");

  const SpatialIndex index(dst);
  const LmSettings settings{cfg.lm_damping_up, cfg.lm_damping_down, 1e12, cfg.lm_max_retries};

  IcpResult result;
  RigidTransform t = initial;
  for (std::uint32_t iter = 1; iter <= cfg.max_iterations; ++iter) {
    const auto pairs = find_correspondences(t.apply(src), index);
    // Damping restarts with every correspondence update.
    double lambda = cfg.lm_damping_init;
    for (std::uint32_t inner = 0; inner < cfg.inner_max_iterations; ++inner) {
      const LmStep step = lm_solve_step(src, dst, dst_normals, pairs, t, lambda, settings);
      result.lm_trace.push_back({iter, inner, step.energy_before, step.energy_after, lambda, step.accepted});
      lambda = step.damping;
      if (!step.accepted) break;
      t = step.transform;
      if (step.delta.norm() < cfg.inner_step_tolerance) break;
    }

    const double e_pt = point_to_point_energy(t.apply(src), dst, pairs);
    const double e_pl = point_to_plane_energy(src, dst, dst_normals, pairs, t);
    result.trace.push_back({iter, e_pt, e_pl, lambda});
    result.iterations = iter;
    if (e_pt < cfg.stop_threshold) {
      result.converged = true;
      break;
    }
  }
  result.transform = t;
  return result;
}

}  // namespace attnorm
