#include "attnorm/synth.hpp"

#include "attnorm/random.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <numbers>

namespace attnorm {

std::uint64_t Rng::index(std::uint64_t n) {
  if (n == 0) throw Error("Rng::index on an empty range");
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec3 Rng::unit_vector() {
  for (;;) {
    const Vec3 v(normal(), normal(), normal());
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Mat3 Rng::rotation() {
  Eigen::Quaterniond q(normal(), normal(), normal(), normal());
  while (q.norm() < 1e-12) q = Eigen::Quaterniond(normal(), normal(), normal(), normal());
  q.normalize();
  return q.toRotationMatrix();
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void sample_sphere(const SyntheticShapeSpec& s, Rng& rng, SyntheticShape& out) {
  const bool round = s.radii.x() == s.radii.y() && s.radii.y() == s.radii.z();
  const Vec3 inv_sq = s.radii.cwiseProduct(s.radii).cwiseInverse();
  for (std::size_t i = 0; i < s.count; ++i) {
    const Vec3 p = s.radii.cwiseProduct(rng.unit_vector());
    out.cloud.points.push_back(p);
    out.cloud.normals.push_back(round ? Vec3(p / p.norm()) : Vec3(p.cwiseProduct(inv_sq).normalized()));
    out.sharp.push_back(0);
  }
}

void sample_cube(const SyntheticShapeSpec& s, Rng& rng, SyntheticShape& out) {
  const Vec3& h = s.half_extents;
  // Face pair areas for normals along x, y, z.
  const double ax = h.y() * h.z(), ay = h.x() * h.z(), az = h.x() * h.y();
  const double total = ax + ay + az;
  for (std::size_t i = 0; i < s.count; ++i) {
    const double pick = rng.uniform() * total;
    const int axis = pick < ax ? 0 : (pick < ax + ay ? 1 : 2);
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const int a = (axis + 1) % 3, b = (axis + 2) % 3;
    Vec3 p;
    p[axis] = sign * h[axis];
    p[a] = rng.uniform(-h[a], h[a]);
    p[b] = rng.uniform(-h[b], h[b]);
    Vec3 n = Vec3::Zero();
    n[axis] = sign;
    const double edge = std::min(h[a] - std::abs(p[a]), h[b] - std::abs(p[b]));
    out.cloud.points.push_back(p);
    out.cloud.normals.push_back(n);
    out.sharp.push_back(edge <= s.sharp_margin ? 1 : 0);
  }
}

void sample_cylinder(const SyntheticShapeSpec& s, Rng& rng, SyntheticShape& out) {
  const double sweep = s.sweep_deg * kDeg;
  const double lateral = sweep * s.radius * s.height;
  const double cap = s.caps ? 0.5 * sweep * s.radius * s.radius : 0.0;
  const double total = lateral + 2.0 * cap;
  const bool partial = s.sweep_deg < 360.0;
  for (std::size_t i = 0; i < s.count; ++i) {
    const double pick = rng.uniform() * total;
    const double theta = rng.uniform() * sweep;
    const double cut_edge = partial ? std::min(theta, sweep - theta) : std::numeric_limits<double>::infinity();
    Vec3 p, n;
    double edge = 0.0;
    if (pick < lateral) {
      const double z = rng.uniform(-0.5 * s.height, 0.5 * s.height);
      p = Vec3(s.radius * std::cos(theta), s.radius * std::sin(theta), z);
      n = Vec3(std::cos(theta), std::sin(theta), 0.0);
      edge = std::min(s.caps ? 0.5 * s.height - std::abs(z) : std::numeric_limits<double>::infinity(),
                      s.radius * cut_edge);
    } else {
      const double sign = pick < lateral + cap ? 1.0 : -1.0;
      const double rho = s.radius * std::sqrt(rng.uniform());
      p = Vec3(rho * std::cos(theta), rho * std::sin(theta), sign * 0.5 * s.height);
      n = Vec3(0.0, 0.0, sign);
      edge = std::min(s.radius - rho, rho * cut_edge);
    }
    out.cloud.points.push_back(p);
    out.cloud.normals.push_back(n);
    out.sharp.push_back(edge <= s.sharp_margin ? 1 : 0);
  }
}

void sample_torus(const SyntheticShapeSpec& s, Rng& rng, SyntheticShape& out) {
  const double sweep = s.sweep_deg * kDeg;
  const double big = s.major_radius, small = s.minor_radius;
  const bool partial = s.sweep_deg < 360.0;
  while (out.cloud.points.size() < s.count) {
    const double u = rng.uniform() * sweep;
    const double v = rng.uniform() * 2.0 * std::numbers::pi;
    // Area element is proportional to (R + r cos v).
    if (rng.uniform() * (big + small) > big + small * std::cos(v)) continue;
    const double ring = big + small * std::cos(v);
    out.cloud.points.emplace_back(ring * std::cos(u), ring * std::sin(u), small * std::sin(v));
    out.cloud.normals.emplace_back(std::cos(v) * std::cos(u), std::cos(v) * std::sin(u), std::sin(v));
    const double edge = partial ? ring * std::min(u, sweep - u) : std::numeric_limits<double>::infinity();
    out.sharp.push_back(edge <= s.sharp_margin ? 1 : 0);
  }
}

void sample_crease(const SyntheticShapeSpec& s, Rng& rng, SyntheticShape& out) {
  const double alpha = s.dihedral_deg * kDeg;
  const Vec3 d1 = Vec3::UnitX();
  const Vec3 d2(std::cos(alpha), 0.0, std::sin(alpha));
  // Normal of a sheet spanned by d and the crease axis y.
  const Vec3 n1 = d1.cross(Vec3::UnitY());
  const Vec3 n2 = d2.cross(Vec3::UnitY());
  for (std::size_t i = 0; i < s.count; ++i) {
    const bool second = rng.uniform() < 0.5;
    const double along = rng.uniform() * s.extent;
    const double y = rng.uniform(-0.5 * s.extent, 0.5 * s.extent);
    out.cloud.points.push_back(along * (second ? d2 : d1) + y * Vec3::UnitY());
    out.cloud.normals.push_back(second ? n2 : n1);
    out.sharp.push_back(along <= s.sharp_margin ? 1 : 0);
  }
}

}  // namespace

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::cube: return "cube";
    case ShapeKind::cylinder: return "cylinder";
    case ShapeKind::torus: return "torus";
    case ShapeKind::crease: return "crease";
  }
  return "unknown";
}

ShapeKind parse_shape_kind(std::string_view name) {
  if (name == "sphere") return ShapeKind::sphere;
  if (name == "cube" || name == "box") return ShapeKind::cube;
  if (name == "cylinder") return ShapeKind::cylinder;
  if (name == "torus") return ShapeKind::torus;
  if (name == "crease" || name == "plane-with-crease") return ShapeKind::crease;
  throw Error("unknown shape kind '" + std::string(name) + "'");
}

void SyntheticShapeSpec::validate() const {
  if (count < 1) throw Error("synthetic shape needs at least one point");
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw Error(std::string(what) + " must be positive");
  };
  switch (kind) {
    case ShapeKind::sphere:
      for (int i = 0; i < 3; ++i) positive(radii[i], "sphere radii");
      break;
    case ShapeKind::cube:
      for (int i = 0; i < 3; ++i) positive(half_extents[i], "cube half extents");
      break;
    case ShapeKind::cylinder:
      positive(radius, "cylinder radius");
      positive(height, "cylinder height");
      positive(sweep_deg, "cylinder sweep");
      break;
    case ShapeKind::torus:
      positive(major_radius, "torus major radius");
      positive(minor_radius, "torus minor radius");
      positive(sweep_deg, "torus sweep");
      if (minor_radius >= major_radius) throw Error("torus minor radius must be below the major radius");
      break;
    case ShapeKind::crease:
      positive(extent, "crease extent");
      positive(dihedral_deg, "crease dihedral angle");
      if (dihedral_deg >= 360.0) throw Error("crease dihedral angle must be below 360");
      break;
  }
  if (sweep_deg > 360.0) throw Error("sweep cannot exceed 360 degrees");
  if (sharp_margin < 0.0) throw Error("sharp margin cannot be negative");
}

SyntheticShape synth_shape(const SyntheticShapeSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SyntheticShape out;
  out.cloud.points.reserve(spec.count);
  out.cloud.normals.reserve(spec.count);
  out.sharp.reserve(spec.count);
  switch (spec.kind) {
    case ShapeKind::sphere: sample_sphere(spec, rng, out); break;
    case ShapeKind::cube: sample_cube(spec, rng, out); break;
    case ShapeKind::cylinder: sample_cylinder(spec, rng, out); break;
    case ShapeKind::torus: sample_torus(spec, rng, out); break;
    case ShapeKind::crease: sample_crease(spec, rng, out); break;
  }
  return out;
}

PointCloud transformed(const PointCloud& cloud, const Mat3& rotation, const Vec3& translation) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(rotation * p + translation);
  out.normals.reserve(cloud.normals.size());
  for (const auto& n : cloud.normals) out.normals.push_back((rotation * n).normalized());
  return out;
}

}  // namespace attnorm
