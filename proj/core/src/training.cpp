#include "m2t/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "m2t/decoder.hpp"
#include "m2t/errors.hpp"
#include "m2t/ops.hpp"

namespace m2t {

void TrainingConfig::validate() const {
  if (!(teacher_forcing >= 0.0 && teacher_forcing <= 1.0)) throw ConfigError("teacher forcing ratio must lie in [0,1]");
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (learning_rate < 0.0) throw ConfigError("learning rate must be >= 0");
  if (grad_clip < 0.0) throw ConfigError("grad clip must be >= 0");
}

Var sequence_loss(std::span<const Var> logits, std::span<const TokenId> targets, double beta) {
  if (logits.size() != targets.size()) {
    throw DimensionError("sequence_loss: " + std::to_string(logits.size()) + " logit rows for " +
                         std::to_string(targets.size()) + " targets");
  }
  if (targets.empty()) throw ArgumentError("sequence_loss on an empty target");
  Var total = nll(logits[0], targets[0]);
  for (std::size_t k = 1; k < targets.size(); ++k) total = total + nll(logits[k], targets[k]);
  return scale(total, 1.0 / std::pow(static_cast<double>(targets.size()), beta));
}

namespace {

TokenId argmax(const Tensor& logits) {
  TokenId best = 0;
  for (TokenId t = 1; t < logits.size(); ++t)
    if (logits[t] > logits[best]) best = t;
  return best;
}

}  // namespace

Var example_loss(const Model& model, ParamBinding& binding, const TrainingExample& example,
                 const TrainingConfig& cfg, std::mt19937_64& rng) {
  if (example.targets.empty()) throw ArgumentError("training example without targets");
  std::bernoulli_distribution coin(cfg.teacher_forcing);
  DecodingContext ctx(model, binding, example.motion);
  DecoderState state = ctx.initial_state();
  const bool sequence_truth = coin(rng);
  std::vector<Var> logits;
  logits.reserve(example.targets.size());
  TokenId prev = special::sos;
  for (TokenId target : example.targets) {
    StepOutput out = ctx.decode_step(state, prev);
    logits.push_back(out.logits);
    state = std::move(out.state);
    const bool truth = cfg.teacher_forcing_per_sequence ? sequence_truth : coin(rng);
    prev = truth ? target : argmax(out.logits.value());
  }
  return sequence_loss(logits, example.targets, cfg.beta);
}

void adam_step(ParameterSet& params, std::span<const Tensor> grads, AdamState& st, double lr) {
  if (grads.size() != params.size()) throw DimensionError("adam: gradient count does not match parameters");
  if (st.m.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      st.m.emplace_back(params.at(i).shape());
      st.v.emplace_back(params.at(i).shape());
    }
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params.at(i);
    const Tensor& g = grads[i];
    if (g.shape() != p.shape()) throw DimensionError("adam: gradient shape mismatch for " + params.name(i));
    Tensor& m = st.m[i];
    Tensor& v = st.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = st.beta1 * m[k] + (1.0 - st.beta1) * g[k];
      v[k] = st.beta2 * v[k] + (1.0 - st.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

double clip_gradients(std::span<Tensor> grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double x : g.values()) sq += x * x;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (Tensor& g : grads)
      for (double& x : g.values()) x *= f;
  }
  return norm;
}

namespace {

struct SampleGrad {
  double loss = 0.0;
  std::vector<Tensor> grads;
};

SampleGrad run_example(const Model& model, const TrainingExample& ex, const TrainingConfig& cfg,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tape tape;
  ParamBinding binding(tape, model.params());
  Var loss = example_loss(model, binding, ex, cfg, rng);
  SampleGrad out;
  out.loss = loss.item();
  out.grads = binding.collect(tape.backward(loss));
  return out;
}

void accumulate(std::vector<Tensor>& total, const std::vector<Tensor>& g, double weight) {
  for (std::size_t i = 0; i < total.size(); ++i) {
    double* t = total[i].data();
    const double* s = g[i].data();
    for (std::size_t k = 0; k < total[i].size(); ++k) t[k] += weight * s[k];
  }
}

}  // namespace

TrainingResult train(Model& model, std::span<const TrainingExample> examples, const TrainingConfig& cfg,
                     const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  if (examples.empty()) throw ArgumentError("training set is empty");
  std::mt19937_64 rng(cfg.seed);
  AdamState adam;
  TrainingResult result;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t workers = std::max<std::size_t>(1, cfg.workers);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
      const std::size_t count = b1 - b0;
      std::vector<std::uint64_t> seeds(count);
      for (auto& s : seeds) s = rng();

      std::vector<Tensor> total;
      for (std::size_t i = 0; i < model.params().size(); ++i) total.emplace_back(model.params().at(i).shape());
      const double weight = 1.0 / static_cast<double>(count);

      if (workers == 1 || count == 1) {
        for (std::size_t k = 0; k < count; ++k) {
          SampleGrad sg = run_example(model, examples[order[b0 + k]], cfg, seeds[k]);
          epoch_loss += sg.loss;
          accumulate(total, sg.grads, weight);
        }
      } else {
        std::vector<SampleGrad> per(count);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(workers, count); ++w) {
          pool.emplace_back([&, w] {
            for (std::size_t k = w; k < count; k += workers)
              per[k] = run_example(model, examples[order[b0 + k]], cfg, seeds[k]);
          });
        }
        for (auto& t : pool) t.join();
        for (std::size_t k = 0; k < count; ++k) {
          epoch_loss += per[k].loss;
          accumulate(total, per[k].grads, weight);
        }
      }
      clip_gradients(total, cfg.grad_clip);
      adam_step(model.params(), total, adam, cfg.learning_rate);
    }
    const double mean = epoch_loss / static_cast<double>(examples.size());
    result.loss_curve.push_back(mean);
    if (on_epoch) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      on_epoch(EpochStats{epoch, mean, secs});
    }
  }
  return result;
}

}  // namespace m2t
