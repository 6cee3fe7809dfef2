#pragma once

#include "attnorm/geometry.hpp"
#include "attnorm/spatial_index.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

namespace attnorm {

using Vec6 = Eigen::Matrix<double, 6, 1>;
/// (source index, destination index).
using Correspondence = std::pair<std::size_t, std::size_t>;

/// x -> R x + t with R a proper rotation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  std::vector<Vec3> apply(const std::vector<Vec3>& xs) const;
  /// (this * other)(x) = this(other(x)).
  RigidTransform operator*(const RigidTransform& other) const;
  RigidTransform inverse() const;

  /// Left-composes the increment (omega, tau): R' = Exp(omega) R, t' = Exp(omega) t + tau,
  /// then re-orthonormalizes R'.
  RigidTransform updated(const Vec6& delta) const;
};

/// Nearest orthonormal matrix with det +1 (polar decomposition via SVD).
Mat3 orthonormalize(const Mat3& r);
/// Rodrigues exponential map of an axis-angle vector.
Mat3 so3_exp(const Vec3& omega);

/// R = Rz * Ry * Rx from per-axis angles in degrees, plus translation.
RigidTransform make_perturbation(const Vec3& angles_deg, const Vec3& translation);

/// Sum over pairs of ||x_s - x_d||^2 (x_s already in the destination frame).
double point_to_point_energy(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                             const std::vector<Correspondence>& pairs);

/// Sum over pairs of (n_d . (T x_s - x_d))^2.
double point_to_plane_energy(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                             const std::vector<Vec3>& dst_normals, const std::vector<Correspondence>& pairs,
                             const RigidTransform& transform);

/// Nearest destination point for every (already transformed) source point; no rejection.
std::vector<Correspondence> find_correspondences(const std::vector<Vec3>& src, const SpatialIndex& dst_index);

/// Residuals r_j = n_j . (T x_j - d_j) and their Jacobian with respect to the
/// left increment (omega, tau) evaluated at zero.
struct PlaneResiduals {
  Eigen::VectorXd r;
  Eigen::Matrix<double, Eigen::Dynamic, 6> jacobian;
};
PlaneResiduals plane_residuals(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                               const std::vector<Vec3>& dst_normals, const std::vector<Correspondence>& pairs,
                               const RigidTransform& transform);

struct LmSettings {
  double damping_up = 10.0;
  double damping_down = 0.3;
  double max_damping = 1e12;
  std::uint32_t max_retries = 20;
};

struct LmStep {
  Vec6 delta = Vec6::Zero();
  double damping = 1e-4;  // damping to use for the next call
  bool accepted = false;
  double energy_before = 0.0;
  double energy_after = 0.0;  // equals energy_before when rejected
  RigidTransform transform;   // updated transform when accepted, else the input
};

/// One Levenberg-Marquardt step on the point-to-plane energy with fixed pairs:
/// solves (J^T J + lambda diag(J^T J)) delta = -J^T r, accepting only steps that
/// decrease the energy (or a zero step at zero gradient). Rejections raise lambda
/// and retry; when lambda exceeds max_damping without progress the step comes
/// back rejected with delta = 0. Throws Error("solver stalled") if the damped
/// system produces a non-finite step.
LmStep lm_solve_step(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                     const std::vector<Vec3>& dst_normals, const std::vector<Correspondence>& pairs,
                     const RigidTransform& transform, double damping, const LmSettings& settings = {});

struct IcpConfig {
  double stop_threshold = 1e-5;     // on the point-to-point energy
  std::uint32_t max_iterations = 200;
  double lm_damping_init = 1e-4;
  double lm_damping_up = 10.0;
  double lm_damping_down = 0.3;
  std::uint32_t lm_max_retries = 20;
  std::uint32_t inner_max_iterations = 50;
  double inner_step_tolerance = 1e-10;

  void validate() const;
};

struct IcpIterationTrace {
  std::uint32_t iteration = 0;
  double point_to_point = 0.0;
  double point_to_plane = 0.0;
  double damping = 0.0;
};

struct LmTrace {
  std::uint32_t iteration = 0;  // outer iteration
  std::uint32_t inner = 0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  double damping = 0.0;
  bool accepted = false;
};

struct IcpResult {
  RigidTransform transform;
  std::uint32_t iterations = 0;
  bool converged = false;
  std::vector<IcpIterationTrace> trace;
  std::vector<LmTrace> lm_trace;
};

/// Point-to-plane ICP estimating T with T src ~ dst. Each outer iteration pairs
/// every transformed source point with its nearest destination point, runs LM
/// on the plane energy until its step falls below inner_step_tolerance, then
/// evaluates the point-to-point energy on those pairs; converged once that is
/// below stop_threshold, failed after max_iterations.
IcpResult icp(const std::vector<Vec3>& src, const std::vector<Vec3>& dst, const std::vector<Vec3>& dst_normals,
              const IcpConfig& cfg = {}, const RigidTransform& initial = RigidTransform::identity());

}  // namespace attnorm
