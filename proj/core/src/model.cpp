#include "attnorm/model.hpp"

#include "attnorm/random.hpp"

#include <cmath>

namespace attnorm {
namespace {

Matrix kaiming_uniform(Rng& rng, std::uint32_t fan_in, std::uint32_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Matrix w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1.0, 1.0) * bound;
  return w;
}

Linear make_linear(Rng& rng, std::uint32_t in, std::uint32_t out) {
  return {kaiming_uniform(rng, in, out), Matrix::Zero(1, out)};
}

ad::Var linear(const ad::Var& x, const ad::Var& w, const ad::Var& b) { return ad::add(ad::matmul(x, w), b); }

Matrix to_matrix(const PointMatrix& m) { return Matrix(m); }

}  // namespace

void ModelConfig::validate() const {
  if (k < 1) throw Error("model k must be at least 1");
  if (heads < 1) throw Error("head count must be at least 1");
  if (feature_dim < heads) throw Error("feature dimension must be at least the head count");
  if (feature_dim % heads != 0) throw Error("head count must divide the feature dimension");
  if (mlp_widths.back() != feature_dim) throw Error("last MLP width must equal the feature dimension");
  for (auto w : mlp_widths) {
    if (w == 0) throw Error("MLP widths must be positive");
  }
  if (ffn_hidden == 0) throw Error("FFN width must be positive");
  if (fc_widths.empty() || fc_widths.back() != 3) throw Error("FC head must end in width 3");
  for (auto w : fc_widths) {
    if (w == 0) throw Error("FC widths must be positive");
  }
}

double ModelParams::temperature() const { return std::exp(log_temperature(0, 0)); }

std::vector<Matrix*> ModelParams::tensors() {
  std::vector<Matrix*> out;
  for (auto& l : mlp) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  for (auto& h : heads) {
    out.push_back(&h.wq);
    out.push_back(&h.wk);
    out.push_back(&h.wv);
  }
  out.push_back(&wo);
  out.push_back(&ffn1.weight);
  out.push_back(&ffn1.bias);
  out.push_back(&ffn2.weight);
  out.push_back(&ffn2.bias);
  for (auto& l : fc) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  out.push_back(&log_temperature);
  return out;
}

std::vector<const Matrix*> ModelParams::tensors() const {
  auto mut = const_cast<ModelParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (auto* t : z.tensors()) t->setZero();
  return z;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

ModelParams init_params(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed);
  ModelParams p;
  p.config = config;

  std::uint32_t in = 3;
  for (std::size_t i = 0; i < 3; ++i) {
    p.mlp[i] = make_linear(rng, in, config.mlp_widths[i]);
    in = config.mlp_widths[i];
  }
  const auto d = config.feature_dim;
  const auto dh = config.head_dim();
  for (std::uint32_t h = 0; h < config.heads; ++h) {
    AttentionHead head;
    head.wq = kaiming_uniform(rng, d, dh);
    head.wk = kaiming_uniform(rng, d, dh);
    head.wv = kaiming_uniform(rng, d, dh);
    p.heads.push_back(std::move(head));
  }
  p.wo = kaiming_uniform(rng, dh * config.heads, d);
  p.ffn1 = make_linear(rng, d, config.ffn_hidden);
  p.ffn2 = make_linear(rng, config.ffn_hidden, d);
  in = d;
  for (auto w : config.fc_widths) {
    p.fc.push_back(make_linear(rng, in, w));
    in = w;
  }
  p.log_temperature = Matrix::Zero(1, 1);
  return p;
}

namespace {

BoundParams bind_impl(ad::Tape& tape, const ModelParams& params, bool differentiable) {
  auto put = [&](const Matrix& m, bool learnable) {
    return differentiable && learnable ? tape.leaf(m) : tape.constant(m);
  };
  BoundParams b;
  for (std::size_t i = 0; i < 3; ++i) {
    b.mlp_w[i] = put(params.mlp[i].weight, true);
    b.mlp_b[i] = put(params.mlp[i].bias, true);
  }
  for (const auto& h : params.heads) {
    b.wq.push_back(put(h.wq, true));
    b.wk.push_back(put(h.wk, true));
    b.wv.push_back(put(h.wv, true));
  }
  b.wo = put(params.wo, true);
  b.ffn1_w = put(params.ffn1.weight, true);
  b.ffn1_b = put(params.ffn1.bias, true);
  b.ffn2_w = put(params.ffn2.weight, true);
  b.ffn2_b = put(params.ffn2.bias, true);
  for (const auto& l : params.fc) {
    b.fc_w.push_back(put(l.weight, true));
    b.fc_b.push_back(put(l.bias, true));
  }
  b.log_temperature = put(params.log_temperature, params.config.learn_temperature);
  b.temperature = ad::exp(b.log_temperature);
  return b;
}

}  // namespace

BoundParams bind(ad::Tape& tape, const ModelParams& params) { return bind_impl(tape, params, true); }

std::vector<ad::Var> BoundParams::leaves() const {
  std::vector<ad::Var> out;
  for (std::size_t i = 0; i < 3; ++i) {
    out.push_back(mlp_w[i]);
    out.push_back(mlp_b[i]);
  }
  for (std::size_t h = 0; h < wq.size(); ++h) {
    out.push_back(wq[h]);
    out.push_back(wk[h]);
    out.push_back(wv[h]);
  }
  out.push_back(wo);
  out.push_back(ffn1_w);
  out.push_back(ffn1_b);
  out.push_back(ffn2_w);
  out.push_back(ffn2_b);
  for (std::size_t i = 0; i < fc_w.size(); ++i) {
    out.push_back(fc_w[i]);
    out.push_back(fc_b[i]);
  }
  out.push_back(log_temperature);
  return out;
}

ad::Var mlp_features(const BoundParams& p, const ad::Var& coords) {
  if (coords.cols() != 3) throw Error("mlp_features expects k x 3 coordinates");
  ad::Var h = coords;
  for (std::size_t i = 0; i < 3; ++i) h = ad::relu(linear(h, p.mlp_w[i], p.mlp_b[i]));
  return h;
}

TsaOutput tsa(const ad::Var& features, const ad::Var& wq, const ad::Var& wk, const ad::Var& wv,
              const ad::Var& temperature) {
  if (!(temperature.scalar() > 0.0)) throw Error("non-positive temperature");
  if (features.cols() != wq.rows()) throw Error("tsa: feature width does not match W_q");
  const ad::Var ft = ad::scalar_div(features, temperature);
  const ad::Var q = ad::matmul(ft, wq);
  const ad::Var k = ad::matmul(ft, wk);
  const ad::Var v = ad::matmul(ft, wv);
  const double scale = 1.0 / std::sqrt(static_cast<double>(wk.cols()));
  const ad::Var logits = ad::scalar_mul(ad::matmul(q, ad::transpose(k)), scale);
  const ad::Var attn = ad::softmax_rows(logits);
  return {ad::matmul(attn, v), attn.value()};
}

TmhsaOutput tmhsa(const BoundParams& p, const ad::Var& features) {
  TmhsaOutput out;
  std::vector<ad::Var> parts;
  parts.reserve(p.wq.size());
  for (std::size_t h = 0; h < p.wq.size(); ++h) {
    auto head = tsa(features, p.wq[h], p.wk[h], p.wv[h], p.temperature);
    parts.push_back(head.features);
    out.attention.push_back(std::move(head.attention));
  }
  out.features = ad::matmul(ad::concat_cols(parts), p.wo);
  return out;
}

ForwardOutput forward(ad::Tape& tape, const BoundParams& p, const PointMatrix& centered) {
  if (centered.rows() < 1) throw Error("empty patch");
  const ad::Var coords = tape.constant(to_matrix(centered));
  const ad::Var f = mlp_features(p, coords);
  auto attn = tmhsa(p, f);
  const ad::Var hidden = ad::relu(linear(attn.features, p.ffn1_w, p.ffn1_b));
  const ad::Var f2 = linear(hidden, p.ffn2_w, p.ffn2_b);
  const ad::Var descriptor = ad::max_rows(f2);

  ad::Var h = descriptor;
  const std::size_t layers = p.fc_w.size();
  for (std::size_t i = 0; i < layers; ++i) {
    h = linear(h, p.fc_w[i], p.fc_b[i]);
    if (i + 1 < layers) h = ad::relu(h);
  }

  ForwardOutput out;
  out.normal = ad::l2_normalize_row(h);
  out.descriptor = descriptor;
  const auto k = centered.rows();
  out.attention.received = Eigen::VectorXd::Zero(k);
  for (const auto& a : attn.attention) out.attention.received += a.colwise().mean().transpose();
  out.attention.received /= static_cast<double>(attn.attention.size());
  out.attention.heads = std::move(attn.attention);
  return out;
}

ad::Var sine_loss(const ad::Var& pred, const ad::Var& gt) {
  if (pred.value().norm() == 0.0 || gt.value().norm() == 0.0) throw Error("zero vector in loss");
  const ad::Var c = ad::cross3(pred, gt);
  return ad::scalar_div(ad::norm2(c), ad::mul(ad::norm2(pred), ad::norm2(gt)));
}

double sine_distance(const Vec3& pred, const Vec3& gt) {
  const double denom = pred.norm() * gt.norm();
  if (denom == 0.0) throw Error("zero vector in loss");
  return pred.cross(gt).norm() / denom;
}

Prediction predict(const ModelParams& params, const PointMatrix& centered) {
  ad::Tape tape;
  const BoundParams b = bind_impl(tape, params, false);
  auto out = forward(tape, b, centered);
  Prediction pred;
  pred.normal = out.normal.value().row(0).transpose();
  pred.attention = std::move(out.attention);
  return pred;
}

AttentionMap export_attention(const ModelParams& params, const PointMatrix& centered) {
  return predict(params, centered).attention;
}

}  // namespace attnorm
