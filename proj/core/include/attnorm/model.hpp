#pragma once

#include "attnorm/autodiff.hpp"
#include "attnorm/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace attnorm {

using ad::Matrix;

/// Network shape. Defaults are the desk-scale architecture.
struct ModelConfig {
  std::uint32_t k = 50;                   // patch size the model is trained for
  std::uint32_t feature_dim = 64;         // D
  std::uint32_t heads = 4;                // H; must divide D
  std::array<std::uint32_t, 3> mlp_widths{32, 64, 64};
  std::uint32_t ffn_hidden = 128;
  std::vector<std::uint32_t> fc_widths{64, 32, 3};
  std::uint64_t seed = 0;
  bool learn_temperature = true;          // false freezes t = 1

  std::uint32_t head_dim() const { return feature_dim / heads; }
  /// Throws Error when the invariants do not hold.
  void validate() const;
};

/// y = x W + b with W stored (in x out) and b a 1 x out row.
struct Linear {
  Matrix weight;
  Matrix bias;
};

struct AttentionHead {
  Matrix wq, wk, wv;  // D x d_h each
};

/// Every learnable tensor. The temperature is stored as log t so t stays positive.
struct ModelParams {
  ModelConfig config;
  std::array<Linear, 3> mlp;
  std::vector<AttentionHead> heads;
  Matrix wo;  // (H d_h) x D
  Linear ffn1, ffn2;
  std::vector<Linear> fc;
  Matrix log_temperature = Matrix::Zero(1, 1);

  double temperature() const;

  /// All tensors in a fixed order (used by the optimiser and serialization).
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;

  /// Same structure, all entries zero.
  ModelParams zeros_like() const;
  std::size_t parameter_count() const;
};

/// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases, t = 1.
ModelParams init_params(const ModelConfig& config);

/// ModelParams bound to a tape as leaves.
struct BoundParams {
  std::array<ad::Var, 3> mlp_w, mlp_b;
  std::vector<ad::Var> wq, wk, wv;
  ad::Var wo;
  ad::Var ffn1_w, ffn1_b, ffn2_w, ffn2_b;
  std::vector<ad::Var> fc_w, fc_b;
  ad::Var log_temperature;
  ad::Var temperature;  // exp(log_temperature)

  /// Leaves in the same order as ModelParams::tensors().
  std::vector<ad::Var> leaves() const;
};

/// Binds every tensor as a leaf. With a frozen temperature, log t is a constant.
BoundParams bind(ad::Tape& tape, const ModelParams& params);

/// Per-head k x k row-stochastic attention and the per-neighbour attention
/// received (column means averaged over heads), in patch row order.
struct AttentionMap {
  std::vector<Matrix> heads;
  Eigen::VectorXd received;
};

/// Shared three-layer per-point MLP with ReLU: k x 3 -> k x D.
ad::Var mlp_features(const BoundParams& p, const ad::Var& coords);

struct TsaOutput {
  ad::Var features;   // k x d_h
  Matrix attention;   // k x k
};

/// Temperature-adjusted self-attention:
/// softmax((F/t) Wq ((F/t) Wk)^T / sqrt(d_h)) (F/t) Wv, with d_h the key width.
TsaOutput tsa(const ad::Var& features, const ad::Var& wq, const ad::Var& wk, const ad::Var& wv,
              const ad::Var& temperature);

struct TmhsaOutput {
  ad::Var features;  // k x D
  std::vector<Matrix> attention;
};

/// Heads concatenated along columns, projected by W_o.
TmhsaOutput tmhsa(const BoundParams& p, const ad::Var& features);

struct ForwardOutput {
  ad::Var normal;      // 1 x 3, unit length
  ad::Var descriptor;  // 1 x D pooled patch descriptor
  AttentionMap attention;
};

/// MLP -> TMHSA -> FFN -> max pool -> FC head -> L2 normalization.
ForwardOutput forward(ad::Tape& tape, const BoundParams& p, const PointMatrix& centered);

/// ||pred x gt|| / (||pred|| ||gt||). Throws Error("zero vector in loss").
ad::Var sine_loss(const ad::Var& pred, const ad::Var& gt);
double sine_distance(const Vec3& pred, const Vec3& gt);

struct Prediction {
  Vec3 normal = Vec3::UnitZ();
  AttentionMap attention;
};

/// Inference on one mean-centered patch.
Prediction predict(const ModelParams& params, const PointMatrix& centered);

/// Same as predict(), without the gradient bookkeeping kept alive.
AttentionMap export_attention(const ModelParams& params, const PointMatrix& centered);

// --- optimisation ---------------------------------------------------------

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t step = 0;
};

AdamState make_adam_state(const ModelParams& params);

/// One bias-corrected Adam update without weight decay. `grads` has the layout
/// of `params`. log t is skipped when the temperature is frozen.
/// Throws Error("diverged") on a non-finite gradient.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

/// One (centered patch, ground-truth normal) training example.
struct TrainSample {
  PointMatrix coords;
  Vec3 normal = Vec3::UnitZ();
};

struct EpochStats {
  std::uint32_t epoch = 0;
  double mean_loss = 0.0;
  double learning_rate = 0.0;
  double temperature = 1.0;
};

struct TrainConfig {
  std::uint32_t epochs = 900;
  std::uint32_t batch_size = 256;
  double learning_rate = 5e-4;
  double lr_decay = 10.0;
  std::vector<std::uint32_t> decay_epochs{400, 800};
  AdamConfig adam;
  std::uint64_t seed = 0;
  /// Called after each epoch; may be empty.
  std::function<void(const EpochStats&)> on_epoch;

  double learning_rate_at(std::uint32_t epoch) const;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> curve;
};

/// Mean sine loss over shuffled mini-batches; deterministic for fixed seeds.
TrainResult train(const std::vector<TrainSample>& dataset, const TrainConfig& cfg, const ModelConfig& mcfg);
/// Continues from existing parameters.
TrainResult train(const std::vector<TrainSample>& dataset, const TrainConfig& cfg, ModelParams params);

/// Loss and gradients of the mean sine loss over a batch.
double batch_gradients(const ModelParams& params, std::span<const TrainSample* const> batch, ModelParams& grads);

// --- checkpoints ------------------------------------------------------------

/// Binary container: magic, version, ModelConfig, then every tensor as raw
/// little-endian doubles. Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace attnorm
