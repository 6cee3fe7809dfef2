#include "attnorm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

namespace attnorm {
namespace {

namespace fs = std::filesystem;

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

// Splits on spaces/tabs and parses every token as a double.
bool parse_numbers(const std::string& line, std::vector<double>& out) {
  out.clear();
  const char* p = line.data();
  const char* end = p + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p == end) break;
    double v = 0.0;
    const char* start = (*p == '+') ? p + 1 : p;
    auto [next, ec] = std::from_chars(start, end, v);
    if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t' && *next != '\r')) return false;
    if (!std::isfinite(v)) return false;
    out.push_back(v);
    p = next;
  }
  return true;
}

std::vector<Vec3> read_triples(const fs::path& path) {
  auto in = open_in(path);
  std::vector<Vec3> out;
  std::string line;
  std::vector<double> values;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    if (!parse_numbers(line, values)) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
    if (values.size() != 3) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected 3 values, found " +
                  std::to_string(values.size()));
    }
    out.emplace_back(values[0], values[1], values[2]);
  }
  return out;
}

}  // namespace

void default_warning(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

std::vector<Vec3> read_xyz(const fs::path& path) { return read_triples(path); }

void write_xyz(const fs::path& path, const std::vector<Vec3>& points) {
  auto out = open_out(path);
  for (const auto& p : points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  finish(out, path);
}

std::vector<Vec3> read_normals(const fs::path& path, const WarningSink& warn) {
  auto normals = read_triples(path);
  std::size_t renormalized = 0;
  for (std::size_t i = 0; i < normals.size(); ++i) {
    const double n = normals[i].norm();
    if (!(n > 0.0)) throw Error(path.string() + ": zero normal at entry " + std::to_string(i));
    if (std::abs(n - 1.0) > 1e-3) ++renormalized;
    // Dividing by a norm within a few ulps of 1 cannot improve it and would perturb exact inputs.
    if (std::abs(n - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) normals[i] /= n;
  }
  if (renormalized > 0 && warn) {
    warn(path.string() + ": renormalized " + std::to_string(renormalized) + " non-unit normals");
  }
  return normals;
}

PointCloud read_cloud(const fs::path& xyz, const std::optional<fs::path>& normals, const WarningSink& warn) {
  PointCloud cloud;
  cloud.points = read_xyz(xyz);
  if (normals) {
    cloud.normals = read_normals(*normals, warn);
    if (cloud.normals.size() != cloud.points.size()) {
      throw Error("line count mismatch: " + xyz.string() + " has " + std::to_string(cloud.points.size()) +
                  " points but " + normals->string() + " has " + std::to_string(cloud.normals.size()) +
                  " normals");
    }
  }
  return cloud;
}

std::vector<std::size_t> read_indices(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::size_t> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    std::istringstream ss(line);
    long long v = -1;
    std::string rest;
    if (!(ss >> v) || v < 0 || (ss >> rest)) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected a non-negative index");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

DatasetManifest load_manifest(const fs::path& data_dir, const fs::path& split_file, SplitTag split) {
  const fs::path list = split_file.is_absolute() ? split_file : data_dir / split_file;
  auto in = open_in(list);
  DatasetManifest manifest;
  manifest.split = split;
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    const auto first = line.find_first_not_of(" \t");
    const auto last = line.find_last_not_of(" \t\r");
    const std::string name = line.substr(first, last - first + 1);
    ShapeFiles shape{name, data_dir / (name + ".xyz"), data_dir / (name + ".normals"), std::nullopt};
    if (!fs::exists(shape.points)) throw Error("missing points file " + shape.points.string());
    if (!fs::exists(shape.normals)) throw Error("missing normals file " + shape.normals.string());
    const fs::path pidx = data_dir / (name + ".pidx");
    if (fs::exists(pidx)) shape.subset = pidx;
    manifest.shapes.push_back(std::move(shape));
  }
  return manifest;
}

PointCloud load_shape(const ShapeFiles& shape, const WarningSink& warn) {
  return read_cloud(shape.points, shape.normals, warn);
}

void write_attention_map(const std::vector<Eigen::VectorXd>& rows, const fs::path& pgm_path,
                         const fs::path& csv_path) {
  if (rows.empty()) throw Error("no attention rows to write");
  const auto width = rows.front().size();
  double max_w = 0.0;
  for (const auto& r : rows) {
    if (r.size() != width) throw Error("attention rows differ in length");
    max_w = std::max(max_w, r.maxCoeff());
  }

  auto pgm = open_out(pgm_path);
  pgm << "P2\n" << width << ' ' << rows.size() << "\n255\n";
  for (const auto& r : rows) {
    for (Eigen::Index i = 0; i < width; ++i) {
      const double scaled = max_w > 0.0 ? 255.0 * std::max(r[i], 0.0) / max_w : 0.0;
      pgm << (i ? " " : "") << static_cast<int>(std::lround(scaled));
    }
    pgm << '\n';
  }
  finish(pgm, pgm_path);

  auto csv = open_out(csv_path);
  csv << "row,col,weight\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Eigen::Index i = 0; i < width; ++i) csv << r << ',' << i << ',' << rows[r][i] << '\n';
  }
  finish(csv, csv_path);
}

std::vector<Eigen::VectorXd> read_attention_csv(const fs::path& csv_path) {
  auto in = open_in(csv_path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("row,col,weight", 0) != 0) {
    throw Error(csv_path.string() + ": missing attention CSV header");
  }
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    std::istringstream ss(line);
    std::size_t r = 0, c = 0;
    double w = 0.0;
    char comma1 = 0, comma2 = 0;
    if (!(ss >> r >> comma1 >> c >> comma2 >> w) || comma1 != ',' || comma2 != ',') {
      throw Error(csv_path.string() + ":" + std::to_string(lineno) + ": malformed attention row");
    }
    if (r >= rows.size()) rows.resize(r + 1);
    if (c != rows[r].size()) throw Error(csv_path.string() + ":" + std::to_string(lineno) + ": columns out of order");
    rows[r].push_back(w);
  }
  std::vector<Eigen::VectorXd> out;
  for (const auto& r : rows) out.push_back(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
  return out;
}

PgmImage read_pgm(const fs::path& path) {
  auto in = open_in(path);
  std::string magic;
  int maxval = 0;
  PgmImage img;
  if (!(in >> magic >> img.width >> img.height >> maxval) || magic != "P2") throw Error(path.string() + ": not a P2 image");
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  for (auto& p : img.pixels) {
    if (!(in >> p)) throw Error(path.string() + ": truncated image");
  }
  return img;
}

}  // namespace attnorm
