#pragma once

#include "attnorm/geometry.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace attnorm {

enum class ShapeKind { sphere, cube, cylinder, torus, crease };

std::string to_string(ShapeKind kind);
/// Accepts "sphere", "cube", "cylinder", "torus", "crease" / "plane-with-crease".
ShapeKind parse_shape_kind(std::string_view name);

/// Parameters for a synthetic surface with analytic normals. Only the fields
/// of the selected kind are used.
struct SyntheticShapeSpec {
  ShapeKind kind = ShapeKind::sphere;
  std::size_t count = 1000;
  std::uint64_t seed = 0;

  Vec3 radii = Vec3::Ones();         // sphere (ellipsoid when unequal)
  Vec3 half_extents = Vec3::Ones();  // cube (box)
  double radius = 0.5;               // cylinder
  double height = 1.0;               // cylinder
  bool caps = true;                  // cylinder
  double major_radius = 1.0;         // torus
  double minor_radius = 0.3;         // torus
  double sweep_deg = 360.0;          // cylinder / torus angular extent
  double extent = 1.0;               // crease sheet length
  double dihedral_deg = 90.0;        // crease angle between the two sheets
  /// Points closer than this to an edge, rim or crease are flagged as sharp.
  double sharp_margin = 0.0;

  void validate() const;
};

struct SyntheticShape {
  PointCloud cloud;                 // points with analytic unit normals
  std::vector<std::uint8_t> sharp;  // 1 where the normal is ill-defined nearby
};

/// Deterministic in the spec (including the seed).
SyntheticShape synth_shape(const SyntheticShapeSpec& spec);

/// Applies x -> R x + t to points and R to normals.
PointCloud transformed(const PointCloud& cloud, const Mat3& rotation, const Vec3& translation = Vec3::Zero());

}  // namespace attnorm
