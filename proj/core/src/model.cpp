#include "m2t/model.hpp"

#include <cmath>

#include "m2t/errors.hpp"

namespace m2t {

void DecoderConfig::validate() const {
  if (vocab_size <= special::count) throw ConfigError("vocabulary must contain words beyond the reserved tokens");
  if (embedding_dim == 0 || hidden_dim == 0) throw ConfigError("decoder sizes must be positive");
  if (max_len == 0) throw ConfigError("max_len must be >= 1");
  if (length_penalty < 0) throw ConfigError("length penalty must be >= 0");
}

void ModelConfig::validate() const {
  encoder.validate();
  attention.validate();
  decoder.validate();
}

Normalizer Normalizer::identity(std::size_t width) {
  return Normalizer{std::vector<double>(width, 0.0), std::vector<double>(width, 1.0)};
}

Normalizer Normalizer::fit(std::span<const Tensor> motions) {
  if (motions.empty()) throw ArgumentError("cannot fit a normalizer on zero motions");
  const std::size_t width = motions[0].cols();
  std::vector<double> sum(width, 0.0), sq(width, 0.0);
  double count = 0.0;
  for (const Tensor& m : motions) {
    if (m.cols() != width) throw DimensionError("motions of different widths");
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < width; ++c) sum[c] += m(r, c);
    }
    count += static_cast<double>(m.rows());
  }
  Normalizer n;
  n.mean.resize(width);
  n.stddev.resize(width);
  for (std::size_t c = 0; c < width; ++c) n.mean[c] = sum[c] / count;
  for (const Tensor& m : motions) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        const double d = m(r, c) - n.mean[c];
        sq[c] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < width; ++c) {
    const double sd = std::sqrt(sq[c] / count);
    n.stddev[c] = sd > 1e-8 ? sd : 1.0;
  }
  return n;
}

Tensor Normalizer::apply(const Tensor& motion) const {
  if (motion.rank() != 2 || motion.cols() != mean.size()) {
    throw DimensionError("normalizer of width " + std::to_string(mean.size()) + " applied to " +
                         shape_string(motion.shape()));
  }
  Tensor out = motion;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < mean.size(); ++c) out(r, c) = (out(r, c) - mean[c]) / stddev[c];
  }
  return out;
}

Model::Model(ModelConfig config, ParameterSet params, Normalizer normalizer)
    : config_(std::move(config)), params_(std::move(params)), normalizer_(std::move(normalizer)) {
  config_.validate();
}

Model Model::create(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ParameterSet params;
  const std::size_t enc_dim = config.encoder.output_dim();
  const std::size_t e = config.decoder.embedding_dim;
  const std::size_t n = config.decoder.hidden_dim;
  const std::size_t v = config.decoder.vocab_size;

  init_encoder_params(config.encoder, params, rng);
  init_attention_params(config.attention, n, enc_dim, params, rng);

  params.add("dec.embedding", init_uniform({v, e}, e, rng));
  init_gru_params("dec.gru", e + enc_dim, n, params, rng);
  if (config.encoder.kind == EncoderKind::mlp) {
    params.add("dec.h0", Tensor(Shape{n}));
  } else if (config.encoder.hidden_dim != n) {
    params.add("dec.init.W", init_uniform({n, config.encoder.hidden_dim}, config.encoder.hidden_dim, rng));
    params.add("dec.init.b", Tensor(Shape{n}));
  }
  const std::size_t proj_in = e + n + enc_dim;
  params.add("out.W", init_uniform({v, proj_in}, proj_in, rng));
  params.add("out.b", Tensor(Shape{v}));

  return Model(config, std::move(params), Normalizer::identity(config.encoder.input_dim));
}

}  // namespace m2t
