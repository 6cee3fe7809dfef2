#pragma once

#include "attnorm/geometry.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace attnorm {

/// Receives non-fatal diagnostics (e.g. renormalized normals). Defaults to stderr.
using WarningSink = std::function<void(const std::string&)>;
void default_warning(const std::string& message);

/// Whitespace-separated "x y z" per line; blank lines are skipped, anything
/// else is an error that cites the line number.
std::vector<Vec3> read_xyz(const std::filesystem::path& path);
/// Writes 17 significant digits so doubles round-trip exactly.
void write_xyz(const std::filesystem::path& path, const std::vector<Vec3>& points);

/// Same format as read_xyz; each vector is normalized, with a warning when its
/// norm deviates from 1 by more than 1e-3. Zero vectors are an error.
std::vector<Vec3> read_normals(const std::filesystem::path& path, const WarningSink& warn = default_warning);

/// Points file plus an aligned normals file; the line counts must agree.
PointCloud read_cloud(const std::filesystem::path& xyz, const std::optional<std::filesystem::path>& normals,
                      const WarningSink& warn = default_warning);

/// One point index per line.
std::vector<std::size_t> read_indices(const std::filesystem::path& path);

enum class SplitTag { train, validation, test };

struct ShapeFiles {
  std::string name;
  std::filesystem::path points;
  std::filesystem::path normals;
  std::optional<std::filesystem::path> subset;  // <name>.pidx when present
};

/// Shapes listed in a split file, one name per line, resolved against a data directory.
struct DatasetManifest {
  SplitTag split = SplitTag::test;
  std::vector<ShapeFiles> shapes;
};

/// Throws when the split file or any listed points/normals file is missing.
DatasetManifest load_manifest(const std::filesystem::path& data_dir, const std::filesystem::path& split_file,
                              SplitTag split);
/// Loads one shape and checks that points and normals align line for line.
PointCloud load_shape(const ShapeFiles& shape, const WarningSink& warn = default_warning);

/// Grayscale P2 image, one row per patch, linearly scaled so the largest weight
/// maps to 255, plus a CSV twin (`row,col,weight`) holding the raw values.
void write_attention_map(const std::vector<Eigen::VectorXd>& rows, const std::filesystem::path& pgm_path,
                         const std::filesystem::path& csv_path);
/// Reads the CSV twin back into rows.
std::vector<Eigen::VectorXd> read_attention_csv(const std::filesystem::path& csv_path);

struct PgmImage {
  int width = 0;
  int height = 0;
  std::vector<int> pixels;  // row-major
};
PgmImage read_pgm(const std::filesystem::path& path);

}  // namespace attnorm
