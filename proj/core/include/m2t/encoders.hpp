#pragma once

#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "m2t/params.hpp"

namespace m2t {

enum class EncoderKind { gru, bigru, mlp };

std::string to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::mlp;
  std::size_t input_dim = 63;
  /// Per-direction state size n of the recurrent encoders.
  std::size_t hidden_dim = 64;
  /// Layer widths d_0..d_{L-1} of the frame-level MLP; the last one is the
  /// encoder output width.
  std::vector<std::size_t> mlp_dims{64, 64};

  /// m: 2 for the bidirectional GRU, 1 otherwise.
  std::size_t direction_multiplier() const noexcept { return kind == EncoderKind::bigru ? 2 : 1; }
  /// Width of one encoder output row.
  std::size_t output_dim() const;
  void validate() const;
};

/// Closed-form parameter count:
///   gru:   3·(n·in + n·n + n)
///   bigru: 2 · gru
///   mlp:   Σ_i (d_{i−1}·d_i + d_i) with d_{−1} = in
std::size_t encoder_param_count(const EncoderConfig& cfg);

/// Adds the encoder parameters under the "enc." prefix.
void init_encoder_params(const EncoderConfig& cfg, ParameterSet& params, std::mt19937_64& rng);
/// Adds a GRU cell (W_{z,r,h}: [n×in], U_{z,r,h}: [n×n], b_{z,r,h}: [n]).
void init_gru_params(std::string_view prefix, std::size_t input_dim, std::size_t hidden_dim,
                     ParameterSet& params, std::mt19937_64& rng);

/// A GRU cell's parameters bound to a tape.
struct GruWeights {
  Var w_z, w_r, w_h;
  Var u_z, u_r, u_h;
  Var b_z, b_r, b_h;
  std::string prefix;

  static GruWeights bind(ParamBinding& binding, std::string_view prefix);
  std::size_t input_dim() const { return w_z.value().cols(); }
  std::size_t hidden_dim() const { return u_z.value().rows(); }
};

/// One GRU step:
///   z = σ(W_z x + U_z h + b_z)
///   r = σ(W_r x + U_r h + b_r)
///   h̃ = tanh(W_h x + U_h (r⊙h) + b_h)
///   h' = (1−z)⊙h̃ + z⊙h
Var gru_cell_step(const GruWeights& w, const Var& x, const Var& h_prev);

struct EncoderOutputs {
  /// s_x: [rows × output_dim]; rows ≥ length.
  Var states;
  /// True number of frames; rows beyond it are padding and never attended.
  std::size_t length = 0;
  /// Last forward-direction GRU state (recurrent encoders only).
  std::optional<Var> final_forward;
};

/// Encodes a [T×input_dim] motion. Throws ArgumentError on an empty motion
/// and DimensionError on a width mismatch.
EncoderOutputs encode(const Var& motion, const EncoderConfig& cfg, ParamBinding& binding);

}  // namespace m2t
