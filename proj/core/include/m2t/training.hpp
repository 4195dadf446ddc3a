#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "m2t/autodiff.hpp"
#include "m2t/model.hpp"

namespace m2t {

struct TrainingConfig {
  double learning_rate = 1e-3;
  /// Probability of feeding the ground-truth previous token.
  double teacher_forcing = 0.5;
  /// Flip the teacher-forcing coin once per sequence instead of per step.
  bool teacher_forcing_per_sequence = false;
  /// β: per-sample loss is divided by |y|^β.
  double beta = 1.0;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  /// Maximum global gradient norm; 0 disables clipping.
  double grad_clip = 5.0;
  /// Threads computing per-sample gradients; reduction order is fixed, so
  /// results do not depend on this value.
  std::size_t workers = 1;

  void validate() const;
};

/// A normalised motion and its target tokens (without sos, ending in eos).
struct TrainingExample {
  Tensor motion;
  std::vector<TokenId> targets;
};

/// −(1/|y|^β)·Σ_k log P(y_k) from per-token logits.
Var sequence_loss(std::span<const Var> logits, std::span<const TokenId> targets, double beta);

/// Teacher-forced loss of one example on `tape`.
Var example_loss(const Model& model, ParamBinding& binding, const TrainingExample& example,
                 const TrainingConfig& cfg, std::mt19937_64& rng);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// Bias-corrected Adam update of every parameter.
void adam_step(ParameterSet& params, std::span<const Tensor> grads, AdamState& state, double lr);

/// Rescales `grads` in place so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_gradients(std::span<Tensor> grads, double max_norm);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double seconds = 0.0;
};

struct TrainingResult {
  /// Mean per-example loss of every epoch.
  std::vector<double> loss_curve;
};

/// Mini-batch training. Initialisation is the caller's (Model::create); the
/// seed here fixes batch order and teacher-forcing draws.
TrainingResult train(Model& model, std::span<const TrainingExample> examples, const TrainingConfig& cfg,
                     const std::function<void(const EpochStats&)>& on_epoch = {});

}  // namespace m2t
