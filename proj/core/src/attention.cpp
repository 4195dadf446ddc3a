#include "m2t/attention.hpp"

#include <cmath>

#include "m2t/errors.hpp"
#include "m2t/ops.hpp"

namespace m2t {

std::string to_string(AttentionMode mode) {
  switch (mode) {
    case AttentionMode::soft: return "soft";
    case AttentionMode::local: return "local";
    case AttentionMode::local_recurrent: return "local-recurrent";
  }
  return "?";
}

AttentionMode parse_attention_mode(std::string_view name) {
  if (name == "soft") return AttentionMode::soft;
  if (name == "local") return AttentionMode::local;
  if (name == "local-recurrent" || name == "local_recurrent") return AttentionMode::local_recurrent;
  throw ConfigError("unknown attention mode '" + std::string(name) + "'");
}

void AttentionConfig::validate() const {
  if (window < 1) throw ConfigError("attention window D must be >= 1");
  if (gaussian_width() <= 0.0) throw ConfigError("gaussian width r must be positive");
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw ConfigError("overlap alpha must lie in [0,1]");
}

void init_attention_params(const AttentionConfig& cfg, std::size_t decoder_dim, std::size_t encoder_dim,
                           ParameterSet& params, std::mt19937_64& rng) {
  cfg.validate();
  params.add("att.W_a", init_uniform({decoder_dim, decoder_dim}, decoder_dim, rng));
  params.add("att.U_a", init_uniform({decoder_dim, encoder_dim}, encoder_dim, rng));
  params.add("att.v_a", init_uniform({decoder_dim}, decoder_dim, rng));
  if (cfg.has_position()) {
    params.add("att.W_p", init_uniform({decoder_dim, decoder_dim}, decoder_dim, rng));
    params.add("att.v_p", init_uniform({decoder_dim}, decoder_dim, rng));
  }
}

Var attention_keys(const EncoderOutputs& enc, ParamBinding& binding) {
  return matmul_nt(enc.states, binding("att.U_a"));
}

Var attention_energies(const Var& h_prev, const Var& keys, const EncoderOutputs& enc, ParamBinding& binding) {
  const std::size_t rows = enc.states.value().rows();
  if (enc.length == 0 || enc.length > rows || keys.value().rows() != rows) {
    throw DimensionError("attention: encoder length " + std::to_string(enc.length) + " inconsistent with " +
                         std::to_string(rows) + " state rows and " + std::to_string(keys.value().rows()) +
                         " key rows");
  }
  Var query = matvec(binding("att.W_a"), h_prev);
  return matvec(tanh(keys + query), binding("att.v_a"));
}

Var local_position(const Var& h_prev, std::size_t frames, ParamBinding& binding) {
  Var logit = dot(binding("att.v_p"), tanh(matvec(binding("att.W_p"), h_prev)));
  return scale(sigmoid(logit), static_cast<double>(frames));
}

Var recurrent_position(const Var& h_prev, const Var& p_prev, std::size_t frames, double epsilon,
                       ParamBinding& binding) {
  const double last = static_cast<double>(frames) - 1.0;
  Var step = sigmoid(dot(binding("att.v_p"), matvec(binding("att.W_p"), h_prev)));
  Var remaining = last - minimum(p_prev, last);
  return (p_prev + epsilon) + remaining * step;
}

SegmentInterval window_segment(double position, int half_width, std::size_t frames, bool causal) {
  const double rounded = std::floor(position + 0.5);
  const double total = static_cast<double>(frames);
  const double lo = std::max(0.0, rounded - half_width);
  const double hi = std::min(total, causal ? rounded : rounded + half_width);
  if (hi <= lo) {
    const int at = static_cast<int>(std::min(total, std::max(0.0, lo)));
    return {at, at};
  }
  return {static_cast<int>(lo), static_cast<int>(hi)};
}

Var gaussian_window(const Var& raw, const Var& position, double width, bool mask, SegmentInterval segment) {
  const Tensor& alpha = raw.value();
  if (alpha.rank() != 1) throw DimensionError("gaussian_window expects a vector, got " + shape_string(alpha.shape()));
  const double p = position.item();
  const double inv2r2 = 1.0 / (2.0 * width * width);
  const int n = static_cast<int>(alpha.size());
  const int lo = mask ? std::max(0, segment.start) : 0;
  const int hi = mask ? std::min(n, segment.end) : n;
  Tensor out(alpha.shape());
  for (int j = lo; j < hi; ++j) {
    const double d = j - p;
    out[j] = alpha[j] * std::exp(-d * d * inv2r2);
  }
  const NodeId ia = raw.id(), ip = position.id();
  return raw.tape().record(std::move(out), {raw, position}, [ia, ip, lo, hi, inv2r2](Tape& t, NodeId self) {
    const Tensor& g = t.grad(self);
    const Tensor& alpha = t.value(ia);
    const double p = t.value(ip)[0];
    Tensor* ga = t.accumulate(ia);
    Tensor* gp = t.accumulate(ip);
    double dp = 0.0;
    for (int j = lo; j < hi; ++j) {
      const double d = j - p;
      const double factor = std::exp(-d * d * inv2r2);
      if (ga) (*ga)[j] += g[j] * factor;
      // ∂/∂p of α·exp(−(j−p)²/2r²) = α·factor·(j−p)/r²
      dp += g[j] * alpha[j] * factor * d * 2.0 * inv2r2;
    }
    if (gp) (*gp)[0] += dp;
  });
}

Var context_vector(const Var& weights, const EncoderOutputs& enc, bool mask, SegmentInterval segment) {
  const std::size_t rows = enc.states.value().rows();
  if (weights.size() != rows) {
    throw DimensionError("context: " + std::to_string(weights.size()) + " weights for " + std::to_string(rows) +
                         " encoder rows");
  }
  if (!mask) return vecmat(weights, enc.states, 0, enc.length);
  const auto lo = static_cast<std::size_t>(std::max(0, segment.start));
  const auto hi = static_cast<std::size_t>(std::max(segment.start, segment.end));
  return vecmat(weights, enc.states, lo, std::min(hi, enc.length));
}

AttentionStep attend(const AttentionConfig& cfg, const Var& h_prev, const std::optional<Var>& p_prev,
                     const Var& keys, const EncoderOutputs& enc, ParamBinding& binding) {
  AttentionStep step;
  step.raw = softmax(attention_energies(h_prev, keys, enc, binding), enc.length);
  const std::size_t frames = enc.length;
  switch (cfg.mode) {
    case AttentionMode::soft:
      step.weights = step.raw;
      step.segment = {0, static_cast<int>(frames)};
      step.context = context_vector(step.weights, enc, false, step.segment);
      return step;
    case AttentionMode::local:
      step.position = local_position(h_prev, frames, binding);
      break;
    case AttentionMode::local_recurrent:
      if (!p_prev) throw StateError("recurrent attention needs the previous position");
      step.position = recurrent_position(h_prev, *p_prev, frames, cfg.epsilon(), binding);
      break;
  }
  step.segment = window_segment(step.position->item(), cfg.window, frames, cfg.causal);
  step.weights = gaussian_window(step.raw, *step.position, cfg.gaussian_width(), cfg.mask, step.segment);
  step.context = context_vector(step.weights, enc, cfg.mask, step.segment);
  return step;
}

}  // namespace m2t
