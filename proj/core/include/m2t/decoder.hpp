#pragma once

#include <optional>
#include <vector>

#include "m2t/attention.hpp"
#include "m2t/beam.hpp"
#include "m2t/encoders.hpp"
#include "m2t/model.hpp"

namespace m2t {

struct DecoderState {
  /// h_{t−1}
  Var h;
  /// p_{t−1}; local_recurrent mode only.
  std::optional<Var> position;
  std::size_t step = 0;
};

struct StepOutput {
  Var logits;
  DecoderState state;
  AttentionStep attention;
};

/// One motion encoded on a tape, ready for step-by-step decoding.
///
/// A step with previous token y_{t−1} and state h_{t−1}:
///   1. attention from h_{t−1} gives a_t, p_t, S_t and the context C_t;
///   2. h_t = GRU(h_{t−1}, [emb(y_{t−1}); C_t]);
///   3. logits = W_o [emb(y_{t−1}); h_t; C_t] + b_o.
class DecodingContext {
 public:
  /// `motion` must already be normalised and outlive the context. Parameters
  /// are taken from `binding`, whose tape records the computation.
  DecodingContext(const Model& model, ParamBinding& binding, const Tensor& motion);

  DecoderState initial_state();
  StepOutput decode_step(const DecoderState& state, TokenId prev_token);

  const EncoderOutputs& encoder() const noexcept { return enc_; }
  ParamBinding& binding() noexcept { return binding_; }
  Tape& tape() noexcept { return binding_.tape(); }
  std::size_t frames() const noexcept { return enc_.length; }

 private:
  const Model& model_;
  ParamBinding& binding_;
  EncoderOutputs enc_;
  Var keys_;
  Var embedding_;
  GruWeights gru_;
  Var out_w_;
  Var out_b_;
};

struct GenerationResult {
  /// Emitted tokens, ending in eos unless max_len was hit.
  std::vector<TokenId> tokens;
  std::vector<double> log_probs;
  /// Σ log_probs.
  double score = 0.0;
  double normalized_score = 0.0;
  /// a_t rows, [tokens × frames].
  Tensor attention;
  /// α_t rows before windowing, [tokens × frames].
  Tensor raw_attention;
  /// p_t per token; empty for soft attention.
  std::vector<double> positions;
  /// S_t per token.
  std::vector<SegmentInterval> segments;

  bool ends_with_eos() const { return !tokens.empty() && tokens.back() == special::eos; }
};

/// Adapts a DecodingContext to the search templates in beam.hpp.
class ModelSession {
 public:
  using State = DecoderState;
  explicit ModelSession(DecodingContext& ctx) : ctx_(ctx) {}
  State initial() { return ctx_.initial_state(); }
  Expansion<State> expand(const State& state, TokenId prev);

 private:
  DecodingContext& ctx_;
};

GenerationResult to_generation_result(const Hypothesis<DecoderState>& hyp, std::size_t frames);

/// Greedy decoding of a raw (unnormalised) motion.
GenerationResult greedy_decode(const Model& model, const Tensor& motion, std::size_t max_len);
/// Beam search; hypotheses sorted by descending normalized score.
std::vector<GenerationResult> beam_decode(const Model& model, const Tensor& motion, std::size_t beam_size,
                                          std::size_t max_len);

}  // namespace m2t
