#include "m2t/decoder.hpp"

#include <cmath>

#include "m2t/errors.hpp"
#include "m2t/ops.hpp"

namespace m2t {

DecodingContext::DecodingContext(const Model& model, ParamBinding& binding, const Tensor& motion)
    : model_(model), binding_(binding) {
  Var x = tape().constant_view(motion);
  enc_ = encode(x, model_.config().encoder, binding_);
  keys_ = attention_keys(enc_, binding_);
  embedding_ = binding_("dec.embedding");
  gru_ = GruWeights::bind(binding_, "dec.gru");
  out_w_ = binding_("out.W");
  out_b_ = binding_("out.b");
}

DecoderState DecodingContext::initial_state() {
  DecoderState s;
  const auto& cfg = model_.config();
  if (cfg.encoder.kind == EncoderKind::mlp) {
    s.h = binding_("dec.h0");
  } else if (model_.params().contains("dec.init.W")) {
    s.h = matvec(binding_("dec.init.W"), *enc_.final_forward) + binding_("dec.init.b");
  } else {
    s.h = *enc_.final_forward;
  }
  if (cfg.attention.mode == AttentionMode::local_recurrent) s.position = tape().constant(Tensor::scalar(0.0));
  return s;
}

StepOutput DecodingContext::decode_step(const DecoderState& state, TokenId prev_token) {
  if (prev_token >= model_.config().decoder.vocab_size) {
    throw ArgumentError("unknown token id " + std::to_string(prev_token));
  }
  StepOutput out;
  out.attention = attend(model_.config().attention, state.h, state.position, keys_, enc_, binding_);
  Var emb = row(embedding_, prev_token);
  Var h = gru_cell_step(gru_, concat({emb, out.attention.context}), state.h);
  out.logits = matvec(out_w_, concat({emb, h, out.attention.context})) + out_b_;
  out.state.h = h;
  out.state.position = out.attention.position;
  out.state.step = state.step + 1;
  return out;
}

namespace {

std::vector<double> log_softmax_values(const Tensor& logits) {
  double mx = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i) mx = std::max(mx, logits[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += std::exp(logits[i] - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::vector<double> to_vector(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

Expansion<DecoderState> ModelSession::expand(const DecoderState& state, TokenId prev) {
  StepOutput step = ctx_.decode_step(state, prev);
  Expansion<DecoderState> ex;
  ex.log_probs = log_softmax_values(step.logits.value());
  ex.trace.weights = to_vector(step.attention.weights.value());
  ex.trace.raw = to_vector(step.attention.raw.value());
  if (step.attention.position) ex.trace.position = step.attention.position->item();
  ex.trace.segment = step.attention.segment;
  ex.next = std::move(step.state);
  return ex;
}

GenerationResult to_generation_result(const Hypothesis<DecoderState>& hyp, std::size_t frames) {
  GenerationResult r;
  r.tokens = hyp.tokens;
  r.log_probs = hyp.log_probs;
  r.score = hyp.score;
  r.normalized_score = hyp.normalized_score;
  const std::size_t n = hyp.tokens.size();
  r.attention = Tensor(Shape{n, frames});
  r.raw_attention = Tensor(Shape{n, frames});
  for (std::size_t t = 0; t < n; ++t) {
    const StepTrace& tr = hyp.traces[t];
    for (std::size_t j = 0; j < frames; ++j) {
      r.attention(t, j) = tr.weights[j];
      r.raw_attention(t, j) = tr.raw[j];
    }
    if (tr.position) r.positions.push_back(*tr.position);
    r.segments.push_back(tr.segment);
  }
  return r;
}

GenerationResult greedy_decode(const Model& model, const Tensor& motion, std::size_t max_len) {
  Tape tape(false);
  ParamBinding binding(tape, model.params());
  const Tensor normalized = model.normalizer().apply(motion);
  DecodingContext ctx(model, binding, normalized);
  ModelSession session(ctx);
  SearchOptions opt;
  opt.max_len = max_len;
  opt.length_penalty = model.config().decoder.length_penalty;
  return to_generation_result(greedy_search(session, opt), ctx.frames());
}

std::vector<GenerationResult> beam_decode(const Model& model, const Tensor& motion, std::size_t beam_size,
                                          std::size_t max_len) {
  if (beam_size < 1) throw ArgumentError("beam size must be >= 1");
  Tape tape(false);
  ParamBinding binding(tape, model.params());
  const Tensor normalized = model.normalizer().apply(motion);
  DecodingContext ctx(model, binding, normalized);
  ModelSession session(ctx);
  SearchOptions opt;
  opt.beam_size = beam_size;
  opt.max_len = max_len;
  opt.length_penalty = model.config().decoder.length_penalty;
  std::vector<GenerationResult> out;
  for (const auto& hyp : beam_search(session, opt)) out.push_back(to_generation_result(hyp, ctx.frames()));
  return out;
}

}  // namespace m2t
