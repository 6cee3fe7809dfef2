#include "attnorm/io.hpp"
#include "attnorm/synth.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace attnorm;
using testing::Random;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("xyz parsing") {
  const auto dir = testing::scratch_dir("xyz");
  write_text(dir / "a.xyz", "0 0 0\n\n1.5 -2 3e-1\n  4\t5 6  \n");
  const auto pts = read_xyz(dir / "a.xyz");
  REQUIRE(pts.size() == 3);
  CHECK(pts[1] == Vec3(1.5, -2, 0.3));
  CHECK(pts[2] == Vec3(4, 5, 6));

  write_text(dir / "empty.xyz", "");
  CHECK(read_xyz(dir / "empty.xyz").empty());

  write_text(dir / "bad.xyz", "0 0 0\n1 2 x\n");
  const std::string bad = message_of([&] { read_xyz(dir / "bad.xyz"); });
  CHECK(bad.find(":2:") != std::string::npos);

  write_text(dir / "short.xyz", "0 0 0\n0 0 0\n1 2\n");
  const std::string arity = message_of([&] { read_xyz(dir / "short.xyz"); });
  CHECK(arity.find(":3:") != std::string::npos);
  CHECK(arity.find("expected 3 values") != std::string::npos);

  CHECK_THROWS_AS(read_xyz(dir / "missing.xyz"), Error);
}

TEST_CASE("xyz round trip is exact") {
  const auto dir = testing::scratch_dir("xyz_round");
  Random rng(1);
  auto pts = rng.cloud(500, -1e3, 1e3);
  pts.push_back({1e-300, -0.1, 1.0 / 3.0});
  write_xyz(dir / "p.xyz", pts);
  CHECK(read_xyz(dir / "p.xyz") == pts);
}

TEST_CASE("normals are normalized with a warning") {
  const auto dir = testing::scratch_dir("normals");
  write_text(dir / "n.normals", "0 0 2\n1 0 0\n0 3 4\n");
  std::vector<std::string> warnings;
  const auto n = read_normals(dir / "n.normals", [&](const std::string& w) { warnings.push_back(w); });
  REQUIRE(n.size() == 3);
  CHECK(n[0] == Vec3(0, 0, 1));
  CHECK(n[1] == Vec3(1, 0, 0));
  CHECK((n[2] - Vec3(0, 0.6, 0.8)).norm() < 1e-15);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("renormalized 2") != std::string::npos);

  // Tiny deviations are fixed silently.
  write_text(dir / "m.normals", "0 0 1.0000001\n");
  warnings.clear();
  read_normals(dir / "m.normals", [&](const std::string& w) { warnings.push_back(w); });
  CHECK(warnings.empty());

  write_text(dir / "z.normals", "0 0 1\n0 0 0\n");
  CHECK_THROWS_AS(read_normals(dir / "z.normals"), Error);
}

TEST_CASE("clouds and manifests") {
  const auto dir = testing::scratch_dir("manifest");
  write_text(dir / "a.xyz", "0 0 0\n1 0 0\n");
  write_text(dir / "a.normals", "0 0 1\n0 0 1\n");
  write_text(dir / "b.xyz", "0 0 0\n1 0 0\n0 1 0\n");
  write_text(dir / "b.normals", "0 0 1\n0 0 1\n");
  write_text(dir / "b.pidx", "2\n0\n");
  write_text(dir / "good.txt", "a\n\n  a  \n");
  write_text(dir / "mixed.txt", "a\nb\n");
  write_text(dir / "absent.txt", "a\nc\n");

  const auto m = load_manifest(dir, "good.txt", SplitTag::train);
  CHECK(m.split == SplitTag::train);
  REQUIRE(m.shapes.size() == 2);
  CHECK(m.shapes[0].name == "a");
  CHECK(m.shapes[1].name == "a");
  CHECK(!m.shapes[0].subset);
  const PointCloud a = load_shape(m.shapes[0]);
  CHECK(a.size() == 2);
  CHECK(a.normals[1] == Vec3(0, 0, 1));

  const auto mixed = load_manifest(dir, dir / "mixed.txt", SplitTag::test);
  REQUIRE(mixed.shapes[1].subset);
  CHECK(read_indices(*mixed.shapes[1].subset) == std::vector<std::size_t>{2, 0});
  const std::string mismatch = message_of([&] { load_shape(mixed.shapes[1]); });
  CHECK(mismatch.find("line count mismatch") != std::string::npos);

  const std::string missing = message_of([&] { load_manifest(dir, "absent.txt", SplitTag::test); });
  CHECK(missing.find("missing points file") != std::string::npos);
  CHECK(missing.find("c.xyz") != std::string::npos);
  CHECK_THROWS_AS(load_manifest(dir, "nope.txt", SplitTag::test), Error);

  write_text(dir / "neg.pidx", "1\n-3\n");
  CHECK_THROWS_AS(read_indices(dir / "neg.pidx"), Error);
}

TEST_CASE("synthetic shapes are deterministic") {
  for (ShapeKind kind : {ShapeKind::sphere, ShapeKind::cube, ShapeKind::cylinder, ShapeKind::torus, ShapeKind::crease}) {
    SyntheticShapeSpec s;
    s.kind = kind;
    s.count = 700;
    s.seed = 11;
    const auto a = synth_shape(s), b = synth_shape(s);
    CAPTURE(to_string(kind));
    CHECK(a.cloud.points == b.cloud.points);
    CHECK(a.cloud.normals == b.cloud.normals);
    CHECK(a.cloud.size() == 700);
    CHECK_NOTHROW(a.cloud.validate());
    CHECK(parse_shape_kind(to_string(kind)) == kind);
    s.seed = 12;
    CHECK(synth_shape(s).cloud.points != a.cloud.points);
  }
  CHECK_THROWS_AS(parse_shape_kind("blob"), Error);
}

TEST_CASE("analytic normals") {
  SyntheticShapeSpec s;
  s.count = 2000;
  s.seed = 3;
  const auto sphere = synth_shape(s).cloud;
  for (std::size_t i = 0; i < sphere.size(); ++i) {
    CHECK(std::abs(sphere.points[i].norm() - 1.0) < 1e-12);
    CHECK((sphere.normals[i] - sphere.points[i].normalized()).norm() < 1e-12);
  }

  s.kind = ShapeKind::cube;
  s.half_extents = Vec3(1.0, 0.5, 0.25);
  const auto box = synth_shape(s).cloud;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Vec3& n = box.normals[i];
    Eigen::Index axis = 0;
    CHECK(n.cwiseAbs().maxCoeff(&axis) == 1.0);
    CHECK(std::abs(n.dot(box.points[i]) - s.half_extents[axis]) < 1e-12);
    CHECK((box.points[i].cwiseAbs() - s.half_extents).maxCoeff() < 1e-12);
  }

  s.kind = ShapeKind::sphere;
  s.radii = Vec3(2.0, 1.0, 0.5);
  const auto ellipsoid = synth_shape(s).cloud;
  for (std::size_t i = 0; i < ellipsoid.size(); ++i) {
    const Vec3 grad = ellipsoid.points[i].cwiseQuotient(s.radii.cwiseAbs2());
    CHECK(std::abs(ellipsoid.points[i].cwiseQuotient(s.radii).norm() - 1.0) < 1e-12);
    CHECK((ellipsoid.normals[i] - grad.normalized()).norm() < 1e-12);
  }

  s = SyntheticShapeSpec{};
  s.kind = ShapeKind::torus;
  s.minor_radius = 1.5;
  CHECK_THROWS_AS(synth_shape(s), Error);
  s.kind = ShapeKind::sphere;
  s.count = 0;
  CHECK_THROWS_AS(synth_shape(s), Error);
}

TEST_CASE("transformed moves points and normals") {
  SyntheticShapeSpec s;
  s.kind = ShapeKind::crease;
  s.count = 300;
  const auto c = synth_shape(s).cloud;
  Random rng(4);
  const Mat3 r = rng.rotation();
  const Vec3 t(0.5, -1, 2);
  const auto moved = transformed(c, r, t);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK((moved.points[i] - (r * c.points[i] + t)).norm() < 1e-14);
    CHECK((moved.normals[i] - r * c.normals[i]).norm() < 1e-14);
  }
}

TEST_CASE("attention map images") {
  const auto dir = testing::scratch_dir("attention");
  std::vector<Eigen::VectorXd> uniform(4, Eigen::VectorXd::Constant(6, 1.0 / 6.0));
  write_attention_map(uniform, dir / "u.pgm", dir / "u.csv");
  const PgmImage u = read_pgm(dir / "u.pgm");
  CHECK(u.width == 6);
  CHECK(u.height == 4);
  CHECK(u.pixels == std::vector<int>(24, 255));

  std::vector<Eigen::VectorXd> onehot(3, Eigen::VectorXd::Zero(5));
  for (int r = 0; r < 3; ++r) onehot[r][r] = 1.0;
  write_attention_map(onehot, dir / "o.pgm", dir / "o.csv");
  const PgmImage o = read_pgm(dir / "o.pgm");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 5; ++c) CHECK(o.pixels[r * 5 + c] == (r == c ? 255 : 0));

  Random rng(5);
  std::vector<Eigen::VectorXd> random(7, Eigen::VectorXd(9));
  for (auto& row : random) {
    for (Eigen::Index i = 0; i < row.size(); ++i) row[i] = rng.uniform();
    row /= row.sum();
  }
  write_attention_map(random, dir / "r.pgm", dir / "r.csv");
  const auto back = read_attention_csv(dir / "r.csv");
  REQUIRE(back.size() == random.size());
  for (std::size_t r = 0; r < back.size(); ++r) CHECK((back[r] - random[r]).cwiseAbs().maxCoeff() < 1e-9);

  CHECK_THROWS_AS(write_attention_map({}, dir / "e.pgm", dir / "e.csv"), Error);
  std::vector<Eigen::VectorXd> ragged{Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(4)};
  CHECK_THROWS_AS(write_attention_map(ragged, dir / "g.pgm", dir / "g.csv"), Error);
}
