#include "attnorm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace attnorm {

double unoriented_angle(const Vec3& pred, const Vec3& gt) {
  const double denom = pred.norm() * gt.norm();
  if (!(denom > 0.0)) throw Error("zero vector in angle error");
  const double c = std::clamp(std::abs(pred.dot(gt)) / denom, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

AngleErrorSet angle_errors(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  if (pred.size() != gt.size()) throw Error("prediction and ground-truth counts differ");
  AngleErrorSet out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) out[i] = unoriented_angle(pred[i], gt[i]);
  return out;
}

double rmse(std::span<const double> errors) {
  if (errors.empty()) throw Error("empty error set");
  double acc = 0.0;
  for (double b : errors) acc += b * b;
  return std::sqrt(acc / static_cast<double>(errors.size()));
}

double pgp(std::span<const double> errors, double alpha) {
  if (errors.empty()) throw Error("empty error set");
  if (!(alpha > 0.0)) throw Error("PGP threshold must be positive");
  const auto good = std::count_if(errors.begin(), errors.end(), [alpha](double b) { return b < alpha; });
  return static_cast<double>(good) / static_cast<double>(errors.size());
}

MetricSummary summarize(std::span<const double> errors) {
  return {rmse(errors), pgp(errors, 5.0), pgp(errors, 10.0), errors.size()};
}

// Formatting goes through a local stream so the caller's stream state is untouched.
void write_errors_csv(std::ostream& os, std::span<const double> errors) {
  std::ostringstream ss;
  ss << "index,beta\n" << std::setprecision(17);
  for (std::size_t i = 0; i < errors.size(); ++i) ss << i << ',' << errors[i] << '\n';
  os << ss.str();
}

void write_summary_line(std::ostream& os, const MetricSummary& s) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << "rmse=" << s.rmse << " pgp5=" << 100.0 * s.pgp5
     << " pgp10=" << 100.0 * s.pgp10 << " n=" << s.count << '\n';
  os << ss.str();
}

}  // namespace attnorm
