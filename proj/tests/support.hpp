#pragma once

#include "attnorm/geometry.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing {

using attnorm::Vec3;

// Test-side randomness, independent of the library's generator.
struct Random {
  std::mt19937_64 engine;
  explicit Random(std::uint64_t seed) : engine(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine); }
  Vec3 vec(double lo = -1.0, double hi = 1.0) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }
  Vec3 unit() {
    Vec3 v(normal(), normal(), normal());
    return v.normalized();
  }
  attnorm::Mat3 rotation() {
    Eigen::Quaterniond q(normal(), normal(), normal(), normal());
    return q.normalized().toRotationMatrix();
  }
  std::vector<Vec3> cloud(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(vec(lo, hi));
    return out;
  }
};

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("attnorm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline attnorm::PointMatrix rows(const std::vector<Vec3>& pts) {
  attnorm::PointMatrix m(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return m;
}

// Angle between two lines in degrees.
inline double line_angle_deg(const Vec3& a, const Vec3& b) {
  const double c = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
  return std::acos(c) * 180.0 / 3.14159265358979323846;
}

}  // namespace testing
