#include "cli.hpp"

#include "attnorm/io.hpp"
#include "attnorm/metrics.hpp"
#include "attnorm/model.hpp"
#include "attnorm/pipeline.hpp"
#include "attnorm/spatial_index.hpp"
#include "attnorm/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace attnorm::cli {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::uint64_t seed = 0;
  std::size_t k = 0;
  std::string estimator;
  std::string checkpoint;
  std::string out_dir = ".";
};

struct InputSpec {
  std::string input;
  std::string normals;
  std::string data_dir;
  std::string split;
  bool ignore_pidx = false;
};

struct LoadedShape {
  std::string name;
  PointCloud cloud;
  std::vector<std::size_t> subset;  // empty means every point
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  WarningSink warn;
};

void add_common(CLI::App* sub, Common& c, bool with_estimator, bool with_checkpoint) {
  sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
  sub->add_option("-k,--k", c.k, "neighbourhood size")->check(CLI::PositiveNumber);
  if (with_estimator) sub->add_option("--estimator", c.estimator, "pca | jet | tmhsa | gt");
  if (with_checkpoint) sub->add_option("--checkpoint", c.checkpoint, "model checkpoint");
  sub->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
}

void add_inputs(CLI::App* sub, InputSpec& in) {
  sub->add_option("--input", in.input, "points file (.xyz)");
  sub->add_option("--normals", in.normals, "ground-truth normals (defaults to <stem>.normals beside the input)");
  sub->add_option("--data-dir", in.data_dir, "dataset directory");
  sub->add_option("--split", in.split, "split file listing shape names (relative to --data-dir)");
  sub->add_flag("--ignore-pidx", in.ignore_pidx, "evaluate every point even when <name>.pidx exists");
}

fs::path resolve_split(const InputSpec& in) {
  // Relative paths name a file under --data-dir unless they exist as given.
  const fs::path split(in.split);
  return split.is_relative() && fs::exists(split) ? fs::absolute(split) : split;
}

std::vector<LoadedShape> load_inputs(const InputSpec& in, const Context& ctx) {
  std::vector<LoadedShape> shapes;
  if (!in.input.empty()) {
    if (!in.data_dir.empty() || !in.split.empty()) throw Error("use either --input or --data-dir/--split, not both");
    const fs::path xyz(in.input);
    if (!fs::exists(xyz)) throw Error("input not found: " + xyz.string());
    std::optional<fs::path> normals;
    if (!in.normals.empty()) {
      normals = fs::path(in.normals);
    } else {
      fs::path sibling = xyz;
      sibling.replace_extension(".normals");
      if (fs::exists(sibling)) normals = sibling;
    }
    LoadedShape s;
    s.name = xyz.stem().string();
    s.cloud = read_cloud(xyz, normals, ctx.warn);
    fs::path pidx = xyz;
    pidx.replace_extension(".pidx");
    if (!in.ignore_pidx && fs::exists(pidx)) s.subset = read_indices(pidx);
    shapes.push_back(std::move(s));
    return shapes;
  }
  if (in.data_dir.empty() || in.split.empty()) throw Error("an input is required: --input, or --data-dir with --split");
  const DatasetManifest manifest = load_manifest(in.data_dir, resolve_split(in), SplitTag::test);
  if (manifest.shapes.empty()) throw Error("manifest lists no shapes");
  for (const auto& files : manifest.shapes) {
    LoadedShape s;
    s.name = files.name;
    s.cloud = load_shape(files, ctx.warn);
    if (!in.ignore_pidx && files.subset) s.subset = read_indices(*files.subset);
    shapes.push_back(std::move(s));
  }
  return shapes;
}

std::vector<Vec3> select(const std::vector<Vec3>& v, const std::vector<std::size_t>& subset) {
  if (subset.empty()) return v;
  std::vector<Vec3> out;
  out.reserve(subset.size());
  for (auto i : subset) out.push_back(v.at(i));
  return out;
}

fs::path prepare_out_dir(const std::string& dir, const CLI::App& app) {
  const fs::path path(dir);
  fs::create_directories(path);
  std::ofstream cfg(path / "effective_config.ini");
  cfg << app.config_to_str(true, false);
  if (!cfg) throw Error("cannot write " + (path / "effective_config.ini").string());
  return path;
}

std::optional<ModelParams> maybe_load_model(const Common& c, bool needed) {
  if (!needed) return std::nullopt;
  if (c.checkpoint.empty()) throw Error("the tmhsa estimator needs --checkpoint");
  if (!fs::exists(c.checkpoint)) throw Error("checkpoint not found: " + c.checkpoint);
  return load_checkpoint(c.checkpoint);
}

std::size_t effective_k(const Common& c, Estimator e, const std::optional<ModelParams>& model, std::size_t fallback) {
  if (e == Estimator::tmhsa && c.k == 0) return model->config.k;
  return c.k == 0 ? fallback : c.k;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

// ---------------------------------------------------------------- estimate

int cmd_estimate(const Common& c, const InputSpec& in, const CLI::App& app, const Context& ctx) {
  const Estimator est = parse_estimator(c.estimator.empty() ? "pca" : c.estimator);
  const auto model = maybe_load_model(c, est == Estimator::tmhsa);
  const auto shapes = load_inputs(in, ctx);
  const fs::path dir = prepare_out_dir(c.out_dir, app);
  EstimateOptions opts;
  opts.estimator = est;
  opts.k = effective_k(c, est, model, 8);
  opts.model = model ? &*model : nullptr;

  int status = 0;
  for (const auto& s : shapes) {
    const auto report = estimate_normals(s.cloud, opts, s.subset);
    if (!report.failed.empty()) {
      ctx.err << s.name << ": estimation failed at " << report.failed.size() << " points (point "
              << report.failed.front() << ": " << report.first_error << ")\n";
      status = 1;
      continue;
    }
    write_xyz(dir / (s.name + ".normals"), report.normals);
    if (s.cloud.has_normals()) {
      const auto errors = angle_errors(report.normals, select(s.cloud.normals, s.subset));
      ctx.out << s.name << ' ';
      write_summary_line(ctx.out, summarize(errors));
    } else {
      ctx.out << s.name << " wrote " << report.normals.size() << " normals\n";
    }
  }
  return status;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string predictions;
  std::string pred_dir;
  std::vector<double> alphas{5.0, 10.0};
  bool write_errors = false;
};

int cmd_eval(const Common& c, const InputSpec& in, const EvalOptions& e, const CLI::App& app, const Context& ctx) {
  for (double a : e.alphas) {
    if (!(a > 0.0)) throw Error("alpha must be positive");
  }
  const auto shapes = load_inputs(in, ctx);
  if (!e.predictions.empty() && shapes.size() != 1) throw Error("--predictions needs a single --input; use --pred-dir");
  const fs::path dir = prepare_out_dir(c.out_dir, app);
  std::ofstream csv(dir / "metrics.csv");
  csv << "shape,n,rmse";
  for (double a : e.alphas) csv << ",pgp" << fmt(a);
  csv << '\n';

  std::vector<ShapeMetrics> all;
  for (const auto& s : shapes) {
    if (!s.cloud.has_normals()) throw Error(s.name + ": no ground-truth normals");
    const fs::path pred_path = e.predictions.empty() ? fs::path(e.pred_dir) / (s.name + ".normals") : fs::path(e.predictions);
    const auto pred = read_normals(pred_path, ctx.warn);
    std::vector<Vec3> gt = s.cloud.normals;
    if (pred.size() != gt.size()) {
      if (s.subset.empty() || pred.size() != s.subset.size())
        throw Error(pred_path.string() + ": " + std::to_string(pred.size()) + " normals for " +
                    std::to_string(gt.size()) + " points");
      gt = select(gt, s.subset);
    }
    const auto errors = angle_errors(pred, gt);
    if (e.write_errors) {
      std::ofstream ecsv(dir / (s.name + ".errors.csv"));
      write_errors_csv(ecsv, errors);
    }
    csv << s.name << ',' << errors.size() << ',' << fmt(rmse(errors));
    for (double a : e.alphas) csv << ',' << fmt(pgp(errors, a));
    csv << '\n';
    const auto summary = summarize(errors);
    ctx.out << s.name << ' ';
    write_summary_line(ctx.out, summary);
    all.push_back({s.name, summary});
  }
  if (all.size() > 1) {
    ctx.out << "mean ";
    write_summary_line(ctx.out, aggregate(std::move(all)).mean);
  }
  if (!csv) throw Error("failed writing metrics.csv");
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::uint32_t epochs = 900;
  std::uint32_t batch_size = 256;
  double learning_rate = 5e-4;
  double lr_decay = 10.0;
  std::vector<std::uint32_t> decay_epochs{400, 800};
  std::size_t patches_per_shape = 0;
  bool frozen_temperature = false;
  std::uint32_t feature_dim = 64;
  std::uint32_t heads = 4;
  std::vector<std::uint32_t> mlp_widths{32, 64, 64};
  std::uint32_t ffn_hidden = 128;
  std::vector<std::uint32_t> fc_widths{64, 32, 3};
};

int cmd_train(const Common& c, const InputSpec& in, const TrainOptions& t, const CLI::App& app, const Context& ctx) {
  if (c.checkpoint.empty()) throw Error("train needs --checkpoint for its output");
  if (t.mlp_widths.size() != 3) throw Error("--mlp-widths takes three values");
  ModelConfig mcfg;
  mcfg.k = static_cast<std::uint32_t>(c.k == 0 ? 50 : c.k);
  mcfg.feature_dim = t.feature_dim;
  mcfg.heads = t.heads;
  std::copy(t.mlp_widths.begin(), t.mlp_widths.end(), mcfg.mlp_widths.begin());
  mcfg.ffn_hidden = t.ffn_hidden;
  mcfg.fc_widths = t.fc_widths;
  mcfg.seed = c.seed;
  mcfg.learn_temperature = !t.frozen_temperature;
  mcfg.validate();

  const auto shapes = load_inputs(in, ctx);
  std::vector<TrainSample> data;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& s = shapes[i];
    auto subset = s.subset;
    if (t.patches_per_shape > 0) subset = sample_indices(s.cloud.size(), t.patches_per_shape, c.seed + i);
    auto samples = make_samples(s.cloud, mcfg.k, subset);
    data.insert(data.end(), std::make_move_iterator(samples.begin()), std::make_move_iterator(samples.end()));
  }
  if (data.empty()) throw Error("no training patches");
  const fs::path dir = prepare_out_dir(c.out_dir, app);

  TrainConfig tcfg;
  tcfg.epochs = t.epochs;
  tcfg.batch_size = t.batch_size;
  tcfg.learning_rate = t.learning_rate;
  tcfg.lr_decay = t.lr_decay;
  tcfg.decay_epochs = t.decay_epochs;
  tcfg.seed = c.seed;
  std::ofstream curve(dir / "loss_curve.csv");
  curve << "epoch,loss,learning_rate,temperature\n" << std::setprecision(17);
  tcfg.on_epoch = [&](const EpochStats& s) {
    curve << s.epoch << ',' << s.mean_loss << ',' << s.learning_rate << ',' << s.temperature << '\n';
    curve.flush();
    ctx.err << "epoch " << s.epoch << " loss " << fmt(s.mean_loss) << " t " << fmt(s.temperature) << '\n';
  };
  const auto result = train(data, tcfg, mcfg);
  save_checkpoint(c.checkpoint, result.params);
  ctx.out << "trained on " << data.size() << " patches; final loss " << fmt(result.curve.back().mean_loss)
          << "; temperature " << fmt(result.params.temperature()) << '\n';
  return 0;
}

// ---------------------------------------------------------------- sweep-k

struct SweepOptions {
  std::vector<std::size_t> ks;
  std::vector<std::string> estimators{"pca"};
  std::size_t points_per_shape = 0;
};

int cmd_sweep_k(const Common& c, const InputSpec& in, const SweepOptions& o, const CLI::App& app, const Context& ctx) {
  if (o.ks.empty()) throw Error("--ks must list at least one k");
  std::vector<std::size_t> ks;
  std::set<std::size_t> seen;
  for (auto k : o.ks) {
    if (k < 1) throw Error("k must be at least 1");
    if (!seen.insert(k).second) {
      ctx.warn("duplicate k=" + std::to_string(k) + " ignored");
      continue;
    }
    ks.push_back(k);
  }
  std::vector<Estimator> estimators;
  for (const auto& name : o.estimators) estimators.push_back(parse_estimator(name));
  const bool need_model = std::count(estimators.begin(), estimators.end(), Estimator::tmhsa) > 0;
  const auto model = maybe_load_model(c, need_model);

  auto shapes = load_inputs(in, ctx);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    auto& s = shapes[i];
    if (!s.cloud.has_normals()) throw Error(s.name + ": no ground-truth normals");
    if (o.points_per_shape > 0 && s.subset.empty())
      s.subset = sample_indices(s.cloud.size(), o.points_per_shape, c.seed + i);
  }
  const fs::path dir = prepare_out_dir(c.out_dir, app);
  std::ofstream csv(dir / "sweep.csv");
  csv << "k,estimator,rmse,pgp5,pgp10\n";

  for (Estimator e : estimators) {
    // A trained model only has one valid neighbourhood size.
    std::vector<std::size_t> grid = ks;
    if (e == Estimator::tmhsa) grid = {model->config.k};
    for (auto k : grid) {
      std::vector<ShapeMetrics> per_shape;
      for (const auto& s : shapes) {
        EstimateOptions opts{e, k, model ? &*model : nullptr};
        const auto report = estimate_normals(s.cloud, opts, s.subset);
        if (!report.failed.empty()) throw Error(s.name + " at k=" + std::to_string(k) + ": " + report.first_error);
        per_shape.push_back({s.name, summarize(angle_errors(report.normals, select(s.cloud.normals, s.subset)))});
      }
      const auto mean = aggregate(std::move(per_shape)).mean;
      csv << k << ',' << to_string(e) << ',' << fmt(mean.rmse) << ',' << fmt(mean.pgp5) << ',' << fmt(mean.pgp10) << '\n';
      ctx.out << "k=" << k << ' ' << to_string(e) << ' ';
      write_summary_line(ctx.out, mean);
    }
  }
  if (!csv) throw Error("failed writing sweep.csv");
  return 0;
}

// ---------------------------------------------------------------- icp

struct IcpOptions {
  std::vector<std::string> estimators{"gt", "pca"};
  std::vector<double> angles{10.0, 10.0, 10.0};
  std::vector<double> translation{0.01, 0.01, 0.01};
  std::uint32_t max_iterations = 200;
  double stop_threshold = 1e-5;
  std::size_t points = 5000;
};

int cmd_icp(const Common& c, const InputSpec& in, const IcpOptions& o, const CLI::App& app, const Context& ctx) {
  if (o.angles.size() != 3 || o.translation.size() != 3) throw Error("--angles and --translation take three values");
  std::vector<Estimator> estimators;
  if (!c.estimator.empty()) {
    estimators.push_back(parse_estimator(c.estimator));
  } else {
    for (const auto& name : o.estimators) estimators.push_back(parse_estimator(name));
  }
  const bool need_model = std::count(estimators.begin(), estimators.end(), Estimator::tmhsa) > 0;
  const auto model = maybe_load_model(c, need_model);

  std::vector<std::pair<std::string, PointCloud>> shapes;
  if (in.input.empty() && in.data_dir.empty()) {
    for (const auto& s : icp_suite(c.seed, o.points)) shapes.emplace_back(s.name, realize(s));
  } else {
    for (auto& s : load_inputs(in, ctx)) shapes.emplace_back(s.name, normalize_to_unit_sphere(s.cloud).cloud);
  }

  IcpProtocol protocol;
  protocol.angles_deg = Vec3(o.angles[0], o.angles[1], o.angles[2]);
  protocol.translation = Vec3(o.translation[0], o.translation[1], o.translation[2]);
  protocol.icp.max_iterations = o.max_iterations;
  protocol.icp.stop_threshold = o.stop_threshold;
  protocol.icp.validate();

  const fs::path dir = prepare_out_dir(c.out_dir, app);
  std::ofstream summary(dir / "icp_summary.csv");
  std::ofstream trace(dir / "icp_trace.csv");
  std::ofstream lm(dir / "lm_trace.csv");
  summary << "shape,estimator,k,iterations,converged\n";
  trace << "shape,estimator,iteration,point_to_point,point_to_plane,damping\n" << std::setprecision(17);
  lm << "shape,estimator,iteration,inner,energy_before,energy_after,damping,accepted\n" << std::setprecision(17);

  ctx.out << std::left << std::setw(16) << "shape";
  for (Estimator e : estimators) ctx.out << std::setw(10) << to_string(e);
  ctx.out << '\n';
  for (const auto& [name, cloud] : shapes) {
    ctx.out << std::setw(16) << name;
    for (Estimator e : estimators) {
      EstimateOptions opts{e, effective_k(c, e, model, 50), model ? &*model : nullptr};
      const IcpRun run = run_icp_protocol(cloud, protocol, opts);
      const auto& r = run.result;
      const std::string tag = to_string(e);
      summary << name << ',' << tag << ',' << (e == Estimator::gt ? 0 : opts.k) << ',' << r.iterations << ','
              << (r.converged ? 1 : 0) << '\n';
      for (const auto& t : r.trace)
        trace << name << ',' << tag << ',' << t.iteration << ',' << t.point_to_point << ',' << t.point_to_plane << ','
              << t.damping << '\n';
      for (const auto& t : r.lm_trace)
        lm << name << ',' << tag << ',' << t.iteration << ',' << t.inner << ',' << t.energy_before << ','
           << t.energy_after << ',' << t.damping << ',' << (t.accepted ? 1 : 0) << '\n';
      ctx.out << std::setw(10) << (r.converged ? std::to_string(r.iterations) : std::string("F"));
    }
    ctx.out << '\n';
  }
  ctx.out << std::right;
  if (!summary || !trace || !lm) throw Error("failed writing ICP outputs");
  return 0;
}

// ---------------------------------------------------------------- attn-dump

struct AttnOptions {
  std::vector<std::size_t> indices;
  std::size_t count = 16;
};

int cmd_attn_dump(const Common& c, const InputSpec& in, const AttnOptions& o, const CLI::App& app, const Context& ctx) {
  const auto model = maybe_load_model(c, true);
  if (c.k != 0 && c.k != model->config.k)
    throw Error("model was trained at k=" + std::to_string(model->config.k) + ", requested k=" + std::to_string(c.k));
  const auto shapes = load_inputs(in, ctx);
  if (shapes.size() != 1) throw Error("attn-dump takes a single shape");
  const PointCloud cloud = normalize_to_unit_sphere(shapes.front().cloud).cloud;
  const std::size_t k = model->config.k;
  if (k > cloud.size()) throw Error("k exceeds cloud size");
  std::vector<std::size_t> queries = o.indices;
  if (queries.empty()) queries = sample_indices(cloud.size(), o.count, c.seed);
  for (auto q : queries) {
    if (q >= cloud.size()) throw Error("patch index " + std::to_string(q) + " out of range");
  }

  const fs::path dir = prepare_out_dir(c.out_dir, app);
  const SpatialIndex index(cloud);
  std::vector<Eigen::VectorXd> rows;
  std::ofstream pts(dir / "attention_points.csv");
  pts << "patch,center,rank,point,x,y,z,weight\n" << std::setprecision(17);
  for (std::size_t r = 0; r < queries.size(); ++r) {
    const Patch patch = extract_patch(cloud, index, queries[r], k);
    const AttentionMap map = export_attention(*model, patch.centered);
    for (std::size_t j = 0; j < patch.k(); ++j) {
      const Vec3& p = cloud.points[patch.neighbor_indices[j]];
      pts << r << ',' << queries[r] << ',' << j << ',' << patch.neighbor_indices[j] << ',' << p.x() << ',' << p.y()
          << ',' << p.z() << ',' << map.received[static_cast<Eigen::Index>(j)] << '\n';
    }
    rows.push_back(map.received);
  }
  write_attention_map(rows, dir / "attention.pgm", dir / "attention.csv");
  if (!pts) throw Error("failed writing attention_points.csv");
  ctx.out << "wrote " << rows.size() << " attention rows of width " << k << " to " << dir.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::string kind = "sphere";
  std::string name;
  std::string suite;
  std::size_t per_kind = 4;
  std::vector<std::string> kinds{"sphere", "cube", "crease"};
  std::string split_file;
  SyntheticShapeSpec spec;
  std::vector<double> radii{1.0, 1.0, 1.0};
  std::vector<double> half_extents{1.0, 1.0, 1.0};
  bool no_caps = false;
  bool normalize = false;
};

void write_shape(const fs::path& dir, const std::string& name, const PointCloud& cloud,
                 const std::vector<std::uint8_t>* sharp) {
  write_xyz(dir / (name + ".xyz"), cloud.points);
  write_xyz(dir / (name + ".normals"), cloud.normals);
  if (sharp != nullptr) {
    std::ofstream f(dir / (name + ".sharp"));
    for (auto s : *sharp) f << int(s) << '\n';
    if (!f) throw Error("failed writing " + name + ".sharp");
  }
}

int cmd_synth(const Common& c, SynthOptions o, const CLI::App& app, const Context& ctx) {
  const fs::path dir = prepare_out_dir(c.out_dir, app);
  std::vector<std::string> names;
  if (!o.suite.empty()) {
    std::vector<NamedShape> shapes;
    if (o.suite == "mixed") {
      std::vector<ShapeKind> kinds;
      for (const auto& k : o.kinds) kinds.push_back(parse_shape_kind(k));
      shapes = mixed_suite(c.seed, o.per_kind, o.spec.count, kinds);
    } else if (o.suite == "icp") {
      shapes = icp_suite(c.seed, o.spec.count);
    } else {
      throw Error("unknown suite '" + o.suite + "' (expected mixed or icp)");
    }
    for (const auto& s : shapes) {
      write_shape(dir, s.name, realize(s), nullptr);
      names.push_back(s.name);
    }
  } else {
    if (o.radii.size() != 3 || o.half_extents.size() != 3) throw Error("--radii and --half-extents take three values");
    o.spec.kind = parse_shape_kind(o.kind);
    o.spec.seed = c.seed;
    o.spec.radii = Vec3(o.radii[0], o.radii[1], o.radii[2]);
    o.spec.half_extents = Vec3(o.half_extents[0], o.half_extents[1], o.half_extents[2]);
    o.spec.caps = !o.no_caps;
    const SyntheticShape shape = synth_shape(o.spec);
    const std::string name = o.name.empty() ? to_string(o.spec.kind) : o.name;
    const PointCloud cloud = o.normalize ? normalize_to_unit_sphere(shape.cloud).cloud : shape.cloud;
    write_shape(dir, name, cloud, &shape.sharp);
    names.push_back(name);
  }
  if (!o.split_file.empty()) {
    std::ofstream split(dir / o.split_file);
    for (const auto& n : names) split << n << '\n';
    if (!split) throw Error("failed writing " + o.split_file);
  }
  ctx.out << "wrote " << names.size() << " shape(s) to " << dir.string() << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point cloud normal estimation with temperature-adjusted attention", "attnorm"};
  app.set_config("--config", "", "INI/TOML file of option defaults; flags override it");
  app.require_subcommand(1);

  Common common;
  InputSpec input;

  auto* estimate = app.add_subcommand("estimate", "estimate normals for a cloud or dataset split");
  add_common(estimate, common, true, true);
  add_inputs(estimate, input);

  EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "score predicted normals against ground truth");
  add_common(eval, common, false, false);
  add_inputs(eval, input);
  eval->add_option("--predictions", eval_opts.predictions, "predicted normals for a single --input");
  eval->add_option("--pred-dir", eval_opts.pred_dir, "directory of <name>.normals predictions");
  eval->add_option("--alpha", eval_opts.alphas, "PGP thresholds in degrees")->capture_default_str();
  eval->add_flag("--write-errors", eval_opts.write_errors, "write per-point <name>.errors.csv");

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "train a model on a dataset split");
  add_common(train_cmd, common, false, true);
  add_inputs(train_cmd, input);
  train_cmd->add_option("--epochs", train_opts.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--batch-size", train_opts.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--lr", train_opts.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--lr-decay", train_opts.lr_decay)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--decay-epochs", train_opts.decay_epochs)->capture_default_str();
  train_cmd->add_option("--patches-per-shape", train_opts.patches_per_shape, "0 uses every point")
      ->capture_default_str();
  train_cmd->add_flag("--frozen-temperature", train_opts.frozen_temperature, "keep t fixed at 1");
  train_cmd->add_option("--feature-dim", train_opts.feature_dim)->capture_default_str();
  train_cmd->add_option("--heads", train_opts.heads)->capture_default_str();
  train_cmd->add_option("--mlp-widths", train_opts.mlp_widths)->capture_default_str();
  train_cmd->add_option("--ffn-hidden", train_opts.ffn_hidden)->capture_default_str();
  train_cmd->add_option("--fc-widths", train_opts.fc_widths)->capture_default_str();

  SweepOptions sweep_opts;
  auto* sweep = app.add_subcommand("sweep-k", "evaluate estimators over a grid of neighbourhood sizes");
  add_common(sweep, common, false, true);
  add_inputs(sweep, input);
  sweep->add_option("--ks", sweep_opts.ks, "k grid")->required();
  sweep->add_option("--estimators", sweep_opts.estimators)->capture_default_str();
  sweep->add_option("--points-per-shape", sweep_opts.points_per_shape, "0 evaluates every point")
      ->capture_default_str();

  IcpOptions icp_opts;
  auto* icp_cmd = app.add_subcommand("icp", "point-to-plane ICP on perturbed copies of each shape");
  add_common(icp_cmd, common, true, true);
  add_inputs(icp_cmd, input);
  icp_cmd->add_option("--estimators", icp_opts.estimators, "normal sources compared side by side")
      ->capture_default_str();
  icp_cmd->add_option("--angles", icp_opts.angles, "perturbation angles in degrees")->capture_default_str();
  icp_cmd->add_option("--translation", icp_opts.translation)->capture_default_str();
  icp_cmd->add_option("--max-iterations", icp_opts.max_iterations)->check(CLI::PositiveNumber)->capture_default_str();
  icp_cmd->add_option("--stop-threshold", icp_opts.stop_threshold)->check(CLI::PositiveNumber)->capture_default_str();
  icp_cmd->add_option("--points", icp_opts.points, "points per built-in shape")->capture_default_str();

  AttnOptions attn_opts;
  auto* attn = app.add_subcommand("attn-dump", "export attention maps for a few patches");
  add_common(attn, common, false, true);
  add_inputs(attn, input);
  attn->add_option("--indices", attn_opts.indices, "query point indices");
  attn->add_option("--count", attn_opts.count, "random patches when no indices are given")->capture_default_str();

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "generate synthetic shapes with analytic normals");
  add_common(synth, common, false, false);
  synth->add_option("--kind", synth_opts.kind, "sphere | cube | cylinder | torus | crease")->capture_default_str();
  synth->add_option("--name", synth_opts.name, "output stem (defaults to the kind)");
  synth->add_option("--suite", synth_opts.suite, "mixed | icp: write a whole suite instead of one shape");
  synth->add_option("--per-kind", synth_opts.per_kind, "shapes per kind in the mixed suite")->capture_default_str();
  synth->add_option("--kinds", synth_opts.kinds, "shape kinds in the mixed suite")->capture_default_str();
  synth->add_option("--split-file", synth_opts.split_file, "also write a split file listing the shapes");
  synth->add_option("--count", synth_opts.spec.count)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--radii", synth_opts.radii)->capture_default_str();
  synth->add_option("--half-extents", synth_opts.half_extents)->capture_default_str();
  synth->add_option("--radius", synth_opts.spec.radius)->capture_default_str();
  synth->add_option("--height", synth_opts.spec.height)->capture_default_str();
  synth->add_flag("--no-caps", synth_opts.no_caps);
  synth->add_option("--major-radius", synth_opts.spec.major_radius)->capture_default_str();
  synth->add_option("--minor-radius", synth_opts.spec.minor_radius)->capture_default_str();
  synth->add_option("--sweep", synth_opts.spec.sweep_deg)->capture_default_str();
  synth->add_option("--extent", synth_opts.spec.extent)->capture_default_str();
  synth->add_option("--dihedral", synth_opts.spec.dihedral_deg)->capture_default_str();
  synth->add_option("--sharp-margin", synth_opts.spec.sharp_margin)->capture_default_str();
  synth->add_flag("--normalize", synth_opts.normalize, "scale into the unit sphere");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  Context ctx{out, err, [&err](const std::string& m) { err << "warning: " << m << '\n'; }};
  try {
    if (*estimate) return cmd_estimate(common, input, app, ctx);
    if (*eval) return cmd_eval(common, input, eval_opts, app, ctx);
    if (*train_cmd) return cmd_train(common, input, train_opts, app, ctx);
    if (*sweep) return cmd_sweep_k(common, input, sweep_opts, app, ctx);
    if (*icp_cmd) return cmd_icp(common, input, icp_opts, app, ctx);
    if (*attn) return cmd_attn_dump(common, input, attn_opts, app, ctx);
    if (*synth) return cmd_synth(common, synth_opts, app, ctx);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace attnorm::cli
