#include "attnorm/pipeline.hpp"

#include "attnorm/classical.hpp"
#include "attnorm/random.hpp"
#include "attnorm/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace attnorm {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::pca: return "pca";
    case Estimator::jet: return "jet";
    case Estimator::tmhsa: return "tmhsa";
    case Estimator::gt: return "gt";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "pca") return Estimator::pca;
  if (name == "jet") return Estimator::jet;
  if (name == "tmhsa") return Estimator::tmhsa;
  if (name == "gt") return Estimator::gt;
  throw Error("unknown estimator '" + std::string(name) + "'");
}

namespace {

std::vector<std::size_t> all_or(std::span<const std::size_t> subset, std::size_t n) {
  if (!subset.empty()) {
    for (auto i : subset) {
      if (i >= n) throw Error("subset index " + std::to_string(i) + " out of range");
    }
    return {subset.begin(), subset.end()};
  }
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

}  // namespace

EstimateReport estimate_normals(const PointCloud& cloud, const EstimateOptions& options,
                                std::span<const std::size_t> subset) {
  if (cloud.empty()) throw Error("empty point cloud");
  const auto queries = all_or(subset, cloud.size());
  EstimateReport report;
  report.normals.reserve(queries.size());

  if (options.estimator == Estimator::gt) {
    if (!cloud.has_normals()) throw Error("gt estimator needs ground-truth normals");
    for (auto i : queries) report.normals.push_back(cloud.normals[i]);
    return report;
  }
  if (options.k < 1) throw Error("k must be at least 1");
  if (options.k > cloud.size()) throw Error("k exceeds cloud size");
  if (options.estimator == Estimator::tmhsa) {
    if (options.model == nullptr) throw Error("tmhsa estimator needs a model");
    if (options.model->config.k != options.k)
      throw Error("model was trained at k=" + std::to_string(options.model->config.k) + ", requested k=" +
                  std::to_string(options.k));
  }

  const NormalizedCloud norm = normalize_to_unit_sphere(cloud);
  const SpatialIndex index(norm.cloud);
  const Vec3 nan = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  for (auto i : queries) {
    try {
      const Patch patch = extract_patch(norm.cloud, index, i, options.k);
      switch (options.estimator) {
        case Estimator::pca: report.normals.push_back(pca_normal(patch)); break;
        case Estimator::jet: report.normals.push_back(jet_normal(patch)); break;
        case Estimator::tmhsa: report.normals.push_back(predict(*options.model, patch.centered).normal); break;
        case Estimator::gt: break;
      }
    } catch (const Error& e) {
      if (report.failed.empty()) report.first_error = e.what();
      report.failed.push_back(i);
      report.normals.push_back(nan);
    }
  }
  return report;
}

std::vector<TrainSample> make_samples(const PointCloud& cloud, std::size_t k, std::span<const std::size_t> subset) {
  if (!cloud.has_normals()) throw Error("training shapes need ground-truth normals");
  if (k > cloud.size()) throw Error("k exceeds cloud size");
  const NormalizedCloud norm = normalize_to_unit_sphere(cloud);
  const SpatialIndex index(norm.cloud);
  std::vector<TrainSample> out;
  for (auto i : all_or(subset, cloud.size())) {
    Patch patch = extract_patch(norm.cloud, index, i, k);
    out.push_back({std::move(patch.centered), cloud.normals[i]});
  }
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (count >= n) return all;
  Rng rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng.index(n - i)]);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

PointCloud realize(const NamedShape& shape) {
  const SyntheticShape s = synth_shape(shape.spec);
  return normalize_to_unit_sphere(transformed(s.cloud, shape.rotation)).cloud;
}

std::span<const ShapeKind> default_mix() {
  static constexpr ShapeKind kinds[] = {ShapeKind::sphere, ShapeKind::cube, ShapeKind::crease};
  return kinds;
}

std::vector<NamedShape> mixed_suite(std::uint64_t seed, std::size_t per_kind, std::size_t points,
                                    std::span<const ShapeKind> kinds) {
  if (kinds.empty()) throw Error("mixed suite needs at least one shape kind");
  Rng rng(seed);
  std::vector<NamedShape> out;
  for (std::size_t i = 0; i < per_kind; ++i) {
    for (ShapeKind kind : kinds) {
      NamedShape shape;
      shape.name = to_string(kind) + "_" + std::to_string(seed) + "_" + std::to_string(i);
      SyntheticShapeSpec& s = shape.spec;
      s.kind = kind;
      s.count = points;
      s.seed = rng.next();
      switch (kind) {
        case ShapeKind::sphere:
          s.radii = Vec3(rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0));
          break;
        case ShapeKind::cube:
          s.half_extents = Vec3(rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0));
          break;
        case ShapeKind::crease:
          s.dihedral_deg = rng.uniform(45.0, 160.0);
          break;
        case ShapeKind::cylinder:
          s.radius = rng.uniform(0.3, 0.6);
          s.height = rng.uniform(0.6, 1.5);
          s.sweep_deg = rng.uniform(200.0, 330.0);
          break;
        case ShapeKind::torus:
          s.minor_radius = rng.uniform(0.2, 0.45);
          s.sweep_deg = rng.uniform(200.0, 330.0);
          break;
      }
      shape.rotation = rng.rotation();
      out.push_back(std::move(shape));
    }
  }
  return out;
}

std::vector<NamedShape> icp_suite(std::uint64_t seed, std::size_t points) {
  std::vector<NamedShape> out(5);
  out[0].name = "box_a";
  out[0].spec.kind = ShapeKind::cube;
  out[0].spec.half_extents = Vec3(1.0, 0.7, 0.45);
  out[1].name = "box_b";
  out[1].spec.kind = ShapeKind::cube;
  out[1].spec.half_extents = Vec3(1.0, 0.55, 0.3);
  out[2].name = "ellipsoid";
  out[2].spec.kind = ShapeKind::sphere;
  out[2].spec.radii = Vec3(1.0, 0.7, 0.45);
  out[3].name = "ellipsoid_b";
  out[3].spec.kind = ShapeKind::sphere;
  out[3].spec.radii = Vec3(1.0, 0.5, 0.8);
  out[4].name = "box_c";
  out[4].spec.kind = ShapeKind::cube;
  out[4].spec.half_extents = Vec3(0.6, 1.0, 0.8);
  Rng rng(seed);
  for (auto& s : out) {
    s.spec.count = points;
    s.spec.seed = rng.next();
  }
  return out;
}

SetMetrics aggregate(std::vector<ShapeMetrics> shapes) {
  if (shapes.empty()) throw Error("no shapes to aggregate");
  SetMetrics out;
  for (const auto& s : shapes) {
    out.mean.rmse += s.summary.rmse;
    out.mean.pgp5 += s.summary.pgp5;
    out.mean.pgp10 += s.summary.pgp10;
    out.mean.count += s.summary.count;
  }
  const double n = static_cast<double>(shapes.size());
  out.mean.rmse /= n;
  out.mean.pgp5 /= n;
  out.mean.pgp10 /= n;
  out.shapes = std::move(shapes);
  return out;
}

IcpRun run_icp_protocol(const PointCloud& source, const IcpProtocol& protocol, const EstimateOptions& options) {
  IcpRun run;
  run.truth = make_perturbation(protocol.angles_deg, protocol.translation);
  const PointCloud dst = transformed(source, run.truth.rotation, run.truth.translation);
  std::vector<Vec3> normals;
  if (options.estimator == Estimator::gt) {
    if (!dst.has_normals()) throw Error("gt estimator needs ground-truth normals");
    normals = dst.normals;
  } else {
    auto report = estimate_normals(dst, options);
    if (!report.failed.empty()) throw Error("normal estimation failed: " + report.first_error);
    normals = std::move(report.normals);
  }
  run.result = icp(source.points, dst.points, normals, protocol.icp);
  return run;
}

}  // namespace attnorm
