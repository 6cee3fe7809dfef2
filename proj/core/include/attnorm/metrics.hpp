#pragma once

#include "attnorm/geometry.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace attnorm {

/// Per-point unoriented angle errors in degrees, aligned with point indices.
using AngleErrorSet = std::vector<double>;

/// arccos(|cos(pred, gt)|) in degrees; sign-blind. Throws on a zero vector.
double unoriented_angle(const Vec3& pred, const Vec3& gt);

AngleErrorSet angle_errors(std::span<const Vec3> pred, std::span<const Vec3> gt);

/// sqrt(mean(beta^2)). Throws on an empty set.
double rmse(std::span<const double> errors);

/// Fraction of errors strictly below alpha degrees. Throws on an empty set or alpha <= 0.
double pgp(std::span<const double> errors, double alpha);

struct MetricSummary {
  double rmse = 0.0;
  double pgp5 = 0.0;
  double pgp10 = 0.0;
  std::size_t count = 0;
};

MetricSummary summarize(std::span<const double> errors);

/// "index,beta" header plus one row per point.
void write_errors_csv(std::ostream& os, std::span<const double> errors);
/// "rmse=..., pgp5=..., pgp10=..." single line (PGP as percentages).
void write_summary_line(std::ostream& os, const MetricSummary& summary);

}  // namespace attnorm
