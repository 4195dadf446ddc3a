#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "m2t/attention.hpp"
#include "m2t/encoders.hpp"
#include "m2t/params.hpp"

namespace m2t {

using TokenId = std::uint32_t;

/// Reserved vocabulary ids.
namespace special {
inline constexpr TokenId pad = 0;
inline constexpr TokenId sos = 1;
inline constexpr TokenId eos = 2;
inline constexpr TokenId unk = 3;
inline constexpr TokenId count = 4;
}  // namespace special

struct DecoderConfig {
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 64;
  /// n', the decoder GRU state size.
  std::size_t hidden_dim = 64;
  std::size_t max_len = 30;
  /// Beam hypotheses are ranked by log-prob sum / length^length_penalty.
  double length_penalty = 0.7;

  void validate() const;
};

struct ModelConfig {
  EncoderConfig encoder;
  AttentionConfig attention;
  DecoderConfig decoder;

  void validate() const;
};

/// Per-coordinate standardisation fitted on training motions.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Normalizer identity(std::size_t width);
  /// Coordinates with (near) zero spread keep unit scale.
  static Normalizer fit(std::span<const Tensor> motions);
  Tensor apply(const Tensor& motion) const;

  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

/// Encoder, attention, decoder and output projection parameters together with
/// their configuration.
///
/// Parameter layout (besides enc.* and att.*):
///   dec.embedding [V×e]        word embeddings
///   dec.gru.*                  decoder GRU, input [e + enc_dim], state n'
///   dec.h0 [n']                learned initial state (MLP encoder)
///   dec.init.W [n'×n], .b      projection of the final encoder state, only
///                              when a recurrent encoder's n differs from n'
///   out.W [V×(e+n'+enc_dim)], out.b [V]
class Model {
 public:
  Model(ModelConfig config, ParameterSet params, Normalizer normalizer);

  /// Fresh parameters drawn from a generator seeded with `seed`.
  static Model create(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  const ParameterSet& params() const noexcept { return params_; }
  ParameterSet& params() noexcept { return params_; }
  const Normalizer& normalizer() const noexcept { return normalizer_; }
  void set_normalizer(Normalizer n) { normalizer_ = std::move(n); }

 private:
  ModelConfig config_;
  ParameterSet params_;
  Normalizer normalizer_;
};

}  // namespace m2t
