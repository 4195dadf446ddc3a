#pragma once

#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "m2t/encoders.hpp"
#include "m2t/interval.hpp"
#include "m2t/params.hpp"

namespace m2t {

enum class AttentionMode { soft, local, local_recurrent };

std::string to_string(AttentionMode mode);
/// Accepts "soft", "local", "local-recurrent" and "local_recurrent".
AttentionMode parse_attention_mode(std::string_view name);

struct AttentionConfig {
  AttentionMode mode = AttentionMode::local_recurrent;
  /// D: half-width of the attended window, in frames.
  int window = 5;
  /// r: Gaussian width in frames; D/2 when unset.
  std::optional<double> width;
  /// Overlap proportion α ∈ [0,1] between successive windows; sets
  /// ε = (1−α)·2D.
  double overlap = 1.0;
  /// Truncate the Gaussian to the window (context sums only over S_t).
  bool mask = true;
  /// Use the causal window ⟦p−D, p⟦ instead of ⟦p−D, p+D⟦.
  bool causal = false;

  double epsilon() const noexcept { return (1.0 - overlap) * 2.0 * window; }
  double gaussian_width() const noexcept { return width ? *width : window / 2.0; }
  bool has_position() const noexcept { return mode != AttentionMode::soft; }
  void validate() const;
};

/// Adds W_a [n'×n'], U_a [n'×enc_dim], v_a [n'] and, for local modes,
/// W_p [n'×n'], v_p [n'] under the "att." prefix.
void init_attention_params(const AttentionConfig& cfg, std::size_t decoder_dim, std::size_t encoder_dim,
                           ParameterSet& params, std::mt19937_64& rng);

/// U_a s_j for every encoder row: [rows × n']. Independent of the decoding
/// step, so it is computed once per sequence.
Var attention_keys(const EncoderOutputs& enc, ParamBinding& binding);

/// e_j = v_aᵀ tanh(W_a h_{t−1} + U_a s_j) for every encoder row. Rows at or
/// beyond enc.length are padding; softmax over the energies must exclude
/// them (see attend()).
Var attention_energies(const Var& h_prev, const Var& keys, const EncoderOutputs& enc, ParamBinding& binding);

/// p_t = T·σ(v_pᵀ tanh(W_p h_{t−1})), in (0, T).
Var local_position(const Var& h_prev, std::size_t frames, ParamBinding& binding);

/// p_t = p_{t−1} + ε + (T−1−min(p_{t−1}, T−1))·σ(v_p·W_p h_{t−1}).
/// Monotone: p_t ≥ p_{t−1} + ε.
Var recurrent_position(const Var& h_prev, const Var& p_prev, std::size_t frames, double epsilon,
                       ParamBinding& binding);

/// S = ⟦round(p)−D, round(p)+D⟦ ∩ ⟦0,T⟦ with round-half-up; the causal
/// variant is ⟦round(p)−D, round(p)⟦ ∩ ⟦0,T⟦. Empty once the position has
/// moved D or more frames past the last frame.
SegmentInterval window_segment(double position, int half_width, std::size_t frames, bool causal = false);

/// a_j = α_j·exp(−(j−p)²/2r²). With mask, entries outside `segment` are
/// exactly zero. Differentiable in both α and p.
Var gaussian_window(const Var& raw, const Var& position, double width, bool mask, SegmentInterval segment);

/// c_t = Σ_j a_j s_x(j); with mask the sum runs over `segment` only.
Var context_vector(const Var& weights, const EncoderOutputs& enc, bool mask, SegmentInterval segment);

/// Everything one decoding step needs from the attention layer.
struct AttentionStep {
  /// a_t, the weights the context uses.
  Var weights;
  /// α_t, the softmax over energies before windowing.
  Var raw;
  /// p_t (local modes only).
  std::optional<Var> position;
  /// S_t; the full valid range in soft mode.
  SegmentInterval segment;
  Var context;
};

/// Runs the configured attention for one step. `p_prev` is required in
/// local_recurrent mode.
AttentionStep attend(const AttentionConfig& cfg, const Var& h_prev, const std::optional<Var>& p_prev,
                     const Var& keys, const EncoderOutputs& enc, ParamBinding& binding);

}  // namespace m2t
