#pragma once

#include "attnorm/geometry.hpp"
#include "attnorm/metrics.hpp"
#include "attnorm/model.hpp"
#include "attnorm/registration.hpp"
#include "attnorm/synth.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace attnorm {

enum class Estimator { pca, jet, tmhsa, gt };

std::string to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

struct EstimateOptions {
  Estimator estimator = Estimator::pca;
  std::size_t k = 8;
  const ModelParams* model = nullptr;  // required for tmhsa, whose k must match the model's
};

struct EstimateReport {
  std::vector<Vec3> normals;             // NaN rows where estimation failed
  std::vector<std::size_t> failed;       // point indices that raised
  std::string first_error;
};

/// Estimates a normal for each requested point (all points when `subset` is
/// empty). Patches are taken from the unit-sphere-normalized cloud. Per-point
/// failures are collected rather than thrown.
EstimateReport estimate_normals(const PointCloud& cloud, const EstimateOptions& options,
                                std::span<const std::size_t> subset = {});

/// Training examples (normalized, mean-centered patches and their ground-truth
/// normals) for the given query points, or every point when `subset` is empty.
std::vector<TrainSample> make_samples(const PointCloud& cloud, std::size_t k, std::span<const std::size_t> subset = {});

/// `count` distinct query indices drawn without replacement (all when count >= n), sorted.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, std::uint64_t seed);

/// Spheres, cubes and creased planes.
std::span<const ShapeKind> default_mix();

/// A generated shape with an orientation applied after sampling.
struct NamedShape {
  std::string name;
  SyntheticShapeSpec spec;
  Mat3 rotation = Mat3::Identity();
};

/// Unit-sphere-normalized cloud with analytic normals.
PointCloud realize(const NamedShape& shape);

/// Randomly parameterized and randomly oriented shapes, `per_kind` of each kind:
/// ellipsoids, boxes, creased sheets, partial cylinders, partial tori.
std::vector<NamedShape> mixed_suite(std::uint64_t seed, std::size_t per_kind, std::size_t points,
                                    std::span<const ShapeKind> kinds = default_mix());

/// Boxes and ellipsoids with distinct axes. Exact normals pin all six degrees of
/// freedom, so point-to-plane registration cannot slide along the surface.
std::vector<NamedShape> icp_suite(std::uint64_t seed, std::size_t points);

struct ShapeMetrics {
  std::string name;
  MetricSummary summary;
};

/// Per-shape metrics and their mean (the usual per-dataset aggregation).
struct SetMetrics {
  std::vector<ShapeMetrics> shapes;
  MetricSummary mean;
};
SetMetrics aggregate(std::vector<ShapeMetrics> shapes);

struct IcpProtocol {
  Vec3 angles_deg = Vec3::Constant(10.0);
  Vec3 translation = Vec3::Constant(0.01);
  IcpConfig icp;
};

struct IcpRun {
  IcpResult result;
  RigidTransform truth;
};

/// Registers `source` (normalized) against its perturbed copy using
/// destination normals from `options` (gt uses the rotated analytic normals).
IcpRun run_icp_protocol(const PointCloud& source, const IcpProtocol& protocol, const EstimateOptions& options);

}  // namespace attnorm
