#include "attnorm/model.hpp"
#include "attnorm/random.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace attnorm {
namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

}  // namespace

AdamState make_adam_state(const ModelParams& params) {
  AdamState s;
  for (const auto* t : params.tensors()) {
    s.m.push_back(Matrix::Zero(t->rows(), t->cols()));
    s.v.push_back(Matrix::Zero(t->rows(), t->cols()));
  }
  return s;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr, const AdamConfig& cfg) {
  auto p = params.tensors();
  const auto g = grads.tensors();
  if (g.size() != p.size() || state.m.size() != p.size()) throw Error("optimizer state does not match parameters");
  for (const auto* t : g) {
    if (!t->allFinite()) throw Error("diverged");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  // log t is the last tensor.
  const std::size_t n = params.config.learn_temperature ? p.size() : p.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (g[i]->rows() != p[i]->rows() || g[i]->cols() != p[i]->cols()) throw Error("gradient shape mismatch");
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * *g[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i]->cwiseProduct(*g[i]);
    const auto mhat = state.m[i].array() / bc1;
    const auto vhat = state.v[i].array() / bc2;
    p[i]->array() -= lr * mhat / (vhat.sqrt() + cfg.eps);
  }
}

double TrainConfig::learning_rate_at(std::uint32_t epoch) const {
  double lr = learning_rate;
  for (auto e : decay_epochs) {
    if (epoch >= e) lr /= lr_decay;
  }
  return lr;
}

double batch_gradients(const ModelParams& params, std::span<const TrainSample* const> batch, ModelParams& grads) {
  if (batch.empty()) throw Error("empty batch");
  auto out = grads.tensors();
  for (auto* t : out) t->setZero();
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  // Fixed reduction order: samples are accumulated in batch order.
  for (const TrainSample* s : batch) {
    ad::Tape tape;
    const BoundParams b = bind(tape, params);
    const auto fwd = forward(tape, b, s->coords);
    const ad::Var gt = tape.constant(Matrix(s->normal.transpose()));
    const ad::Var loss = sine_loss(fwd.normal, gt);
    total += loss.scalar();
    const auto g = tape.backward(loss, inv);
    const auto leaves = b.leaves();
    for (std::size_t i = 0; i < leaves.size(); ++i) *out[i] += g[leaves[i]];
  }
  return total * inv;
}

TrainResult train(const std::vector<TrainSample>& dataset, const TrainConfig& cfg, const ModelConfig& mcfg) {
  return train(dataset, cfg, init_params(mcfg));
}

TrainResult train(const std::vector<TrainSample>& dataset, const TrainConfig& cfg, ModelParams params) {
  if (dataset.empty()) throw Error("empty training set");
  if (cfg.epochs < 1) throw Error("epochs must be at least 1");
  if (!(cfg.learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (cfg.batch_size < 1) throw Error("batch size must be at least 1");
  params.config.validate();

  TrainResult result;
  AdamState state = make_adam_state(params);
  ModelParams grads = params.zeros_like();
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<const TrainSample*> batch;

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    const double lr = cfg.learning_rate_at(epoch);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&dataset[order[i]]);
      const double loss = batch_gradients(params, batch, grads);
      if (!std::isfinite(loss)) throw Error("diverged: non-finite loss in epoch " + std::to_string(epoch));
      loss_sum += loss * static_cast<double>(batch.size());
      adam_step(params, grads, state, lr, cfg.adam);
    }
    EpochStats stats{epoch, loss_sum / static_cast<double>(dataset.size()), lr, params.temperature()};
    result.curve.push_back(stats);
    if (cfg.on_epoch) cfg.on_epoch(stats);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace attnorm
