// Random finite-difference instances for every differentiable operation and
// for whole decoding steps. Shared by the unit tests and the acceptance run.
#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "m2t/attention.hpp"
#include "m2t/decoder.hpp"
#include "m2t/encoders.hpp"
#include "m2t/grad_check.hpp"
#include "m2t/ops.hpp"
#include "m2t/training.hpp"

namespace m2t::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : t.values()) v = d(rng);
  return t;
}

inline std::size_t random_dim(std::mt19937_64& rng, std::size_t lo = 1, std::size_t hi = 4) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Contracts `v` with a fixed random tensor so every output entry matters.
inline Var project(const Var& v, const Tensor& weights) {
  Var w = v.tape().constant_view(weights);
  return sum(mul(v, w));
}

struct GradCase {
  std::string name;
  /// Draws one random instance and returns its grad_check error.
  std::function<double(std::mt19937_64&)> run;
};

inline ModelConfig tiny_model_config(EncoderKind encoder, AttentionMode mode, bool mask) {
  ModelConfig c;
  c.encoder.kind = encoder;
  c.encoder.input_dim = 4;
  c.encoder.hidden_dim = 3;
  c.encoder.mlp_dims = {4, 3};
  c.attention.mode = mode;
  c.attention.window = 2;
  c.attention.mask = mask;
  c.decoder.vocab_size = 7;
  c.decoder.embedding_dim = 3;
  c.decoder.hidden_dim = 4;
  c.decoder.max_len = 6;
  return c;
}

/// A model with every parameter (including zero-initialised ones) drawn
/// uniformly from [−scale, scale].
inline Model random_model(const ModelConfig& config, std::mt19937_64& rng, double scale = 0.8) {
  Model m = Model::create(config, rng());
  std::uniform_real_distribution<double> d(-scale, scale);
  for (std::size_t i = 0; i < m.params().size(); ++i)
    for (double& v : m.params().at(i).values()) v = d(rng);
  return m;
}

/// Window bounds jump where round(p) does; finite differences across such a
/// jump are meaningless, so instances this close to one are redrawn.
inline bool near_rounding_boundary(double p, double margin = 1e-3) {
  return std::abs(p - std::floor(p) - 0.5) < margin;
}

/// Teacher-forced loss over a few decoding steps.
inline double decode_steps_case(std::mt19937_64& rng, EncoderKind encoder, AttentionMode mode, bool mask,
                                std::size_t steps = 3) {
  const ModelConfig cfg = tiny_model_config(encoder, mode, mask);
  for (;;) {
    Model model = random_model(cfg, rng);
    const Tensor motion = random_tensor({random_dim(rng, 4, 6), cfg.encoder.input_dim}, rng);
    std::vector<TokenId> targets;
    for (std::size_t i = 0; i < steps; ++i)
      targets.push_back(static_cast<TokenId>(std::uniform_int_distribution<int>(0, 6)(rng)));
    bool clean = true;
    auto loss = [&](ParamBinding& binding) {
      DecodingContext ctx(model, binding, motion);
      DecoderState state = ctx.initial_state();
      std::vector<Var> logits;
      TokenId prev = special::sos;
      for (TokenId t : targets) {
        auto out = ctx.decode_step(state, prev);
        if (out.attention.position && near_rounding_boundary(out.attention.position->item())) clean = false;
        logits.push_back(out.logits);
        state = out.state;
        prev = t;
      }
      return sequence_loss(logits, targets, 1.0);
    };
    {
      Tape probe(false);
      ParamBinding binding(probe, model.params());
      loss(binding);
    }
    if (clean) return grad_check(loss, model.params());
  }
}

inline std::vector<GradCase> gradient_cases() {
  using R = std::mt19937_64;
  std::vector<GradCase> cases;
  auto unary = [&](std::string name, std::function<Var(const Var&)> op, double lo = -2.0, double hi = 2.0) {
    cases.push_back({name, [op, lo, hi](R& rng) {
                       Tensor x = random_tensor({random_dim(rng), random_dim(rng)}, rng, lo, hi);
                       Tape probe(false);
                       Tensor w = random_tensor(op(probe.constant_view(x)).shape(), rng);
                       return grad_check([&](Tape&, const Var& v) { return project(op(v), w); }, x);
                     }});
  };
  unary("tanh", [](const Var& v) { return tanh(v); });
  unary("sigmoid", [](const Var& v) { return sigmoid(v); }, -6.0, 6.0);
  unary("exp", [](const Var& v) { return exp(v); });
  unary("log", [](const Var& v) { return log(v); }, 0.2, 3.0);
  unary("scale", [](const Var& v) { return scale(v, -1.7); });
  unary("add_scalar", [](const Var& v) { return add_scalar(v, 0.3); });
  unary("sum", [](const Var& v) { return sum(v) * sum(v); });

  cases.push_back({"minimum", [](R& rng) {
                     // Keep entries away from the kink at c = 0.
                     Tensor x = random_tensor({random_dim(rng, 2, 6)}, rng, 0.1, 1.0);
                     for (std::size_t i = 0; i < x.size(); i += 2) x[i] = -x[i];
                     Tensor w = random_tensor(x.shape(), rng);
                     return grad_check([&](Tape&, const Var& v) { return project(minimum(v, 0.0), w); }, x);
                   }});

  auto binary = [&](std::string name, std::function<Var(const Var&, const Var&)> op,
                    std::function<std::pair<Shape, Shape>(R&)> shapes) {
    cases.push_back({name, [op, shapes](R& rng) {
                       auto [sa, sb] = shapes(rng);
                       const Tensor pts[] = {random_tensor(sa, rng), random_tensor(sb, rng)};
                       Tape probe(false);
                       const Shape out = op(probe.constant_view(pts[0]), probe.constant_view(pts[1])).shape();
                       Tensor w = random_tensor(out, rng);
                       return grad_check([&](Tape&, std::span<const Var> v) { return project(op(v[0], v[1]), w); },
                                         pts);
                     }});
  };
  auto same = [](R& rng) {
    Shape s{random_dim(rng), random_dim(rng)};
    return std::pair{s, s};
  };
  binary("add", [](const Var& a, const Var& b) { return add(a, b); }, same);
  binary("sub", [](const Var& a, const Var& b) { return sub(a, b); }, same);
  binary("mul", [](const Var& a, const Var& b) { return mul(a, b); }, same);
  binary("add_row_broadcast", [](const Var& a, const Var& b) { return add(a, b); }, [](R& rng) {
    const auto n = random_dim(rng);
    return std::pair{Shape{random_dim(rng), n}, Shape{n}};
  });
  binary("add_scalar_broadcast", [](const Var& a, const Var& b) { return add(a, b); }, [](R& rng) {
    return std::pair{Shape{random_dim(rng), random_dim(rng)}, Shape{}};
  });
  binary("mul_scalar_broadcast", [](const Var& a, const Var& b) { return mul(a, b); }, [](R& rng) {
    return std::pair{Shape{random_dim(rng), random_dim(rng)}, Shape{}};
  });
  binary("matmul", [](const Var& a, const Var& b) { return matmul(a, b); }, [](R& rng) {
    const auto k = random_dim(rng);
    return std::pair{Shape{random_dim(rng), k}, Shape{k, random_dim(rng)}};
  });
  binary("matmul_nt", [](const Var& a, const Var& b) { return matmul_nt(a, b); }, [](R& rng) {
    const auto k = random_dim(rng);
    return std::pair{Shape{random_dim(rng), k}, Shape{random_dim(rng), k}};
  });
  binary("matvec", [](const Var& a, const Var& b) { return matvec(a, b); }, [](R& rng) {
    const auto k = random_dim(rng);
    return std::pair{Shape{random_dim(rng), k}, Shape{k}};
  });
  binary("vecmat_range", [](const Var& x, const Var& m) { return vecmat(x, m, 1, x.size() - 1); }, [](R& rng) {
    const auto t = random_dim(rng, 3, 6);
    return std::pair{Shape{t}, Shape{t, random_dim(rng)}};
  });
  binary("dot", [](const Var& a, const Var& b) { return dot(a, b); }, [](R& rng) {
    Shape s{random_dim(rng, 1, 6)};
    return std::pair{s, s};
  });
  binary("concat_vectors", [](const Var& a, const Var& b) { return concat({a, b}); }, [](R& rng) {
    return std::pair{Shape{random_dim(rng)}, Shape{random_dim(rng)}};
  });
  binary("concat_columns", [](const Var& a, const Var& b) { return concat({a, b}, 1); }, [](R& rng) {
    const auto m = random_dim(rng);
    return std::pair{Shape{m, random_dim(rng)}, Shape{m, random_dim(rng)}};
  });
  binary("concat_rows", [](const Var& a, const Var& b) { return concat({a, b}, 0); }, [](R& rng) {
    const auto n = random_dim(rng);
    return std::pair{Shape{random_dim(rng), n}, Shape{random_dim(rng), n}};
  });
  binary("stack_rows", [](const Var& a, const Var& b) { return stack_rows(std::vector<Var>{a, b, a}); },
         [](R& rng) {
           Shape s{random_dim(rng)};
           return std::pair{s, s};
         });

  cases.push_back({"softmax_prefix", [](R& rng) {
                     const auto n = random_dim(rng, 2, 7);
                     const auto valid = random_dim(rng, 1, n);
                     Tensor x = random_tensor({n}, rng, -3, 3), w = random_tensor({n}, rng);
                     return grad_check([&](Tape&, const Var& v) { return project(softmax(v, valid), w); }, x);
                   }});
  cases.push_back({"log_softmax", [](R& rng) {
                     Tensor x = random_tensor({random_dim(rng, 2, 7)}, rng, -3, 3);
                     Tensor w = random_tensor(x.shape(), rng);
                     return grad_check([&](Tape&, const Var& v) { return project(log_softmax(v), w); }, x);
                   }});
  cases.push_back({"nll", [](R& rng) {
                     Tensor x = random_tensor({random_dim(rng, 2, 7)}, rng, -3, 3);
                     const auto target = std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng);
                     return grad_check([&](Tape&, const Var& v) { return nll(v, target); }, x);
                   }});
  cases.push_back({"row_and_element", [](R& rng) {
                     Tensor m = random_tensor({random_dim(rng, 2, 5), random_dim(rng, 2, 5)}, rng);
                     return grad_check(
                         [&](Tape&, const Var& v) { return tanh(element(row(v, 1), 1)) + sum(row(v, 0)); }, m);
                   }});

  cases.push_back({"gru_cell_step", [](R& rng) {
                     ParameterSet params;
                     const auto in = random_dim(rng, 1, 4), n = random_dim(rng, 1, 4);
                     init_gru_params("g", in, n, params, rng);
                     params.add("x", random_tensor({in}, rng));
                     params.add("h", random_tensor({n}, rng));
                     Tensor w = random_tensor({n}, rng);
                     return grad_check(
                         [&](ParamBinding& b) {
                           auto g = GruWeights::bind(b, "g");
                           return project(gru_cell_step(g, b("x"), b("h")), w);
                         },
                         params);
                   }});

  for (EncoderKind kind : {EncoderKind::mlp, EncoderKind::gru, EncoderKind::bigru}) {
    cases.push_back({"encode_" + to_string(kind), [kind](R& rng) {
                       EncoderConfig cfg;
                       cfg.kind = kind;
                       cfg.input_dim = 3;
                       cfg.hidden_dim = 3;
                       cfg.mlp_dims = {4, 3};
                       ParameterSet params;
                       init_encoder_params(cfg, params, rng);
                       params.add("motion", random_tensor({random_dim(rng, 2, 5), 3}, rng));
                       Tensor w = random_tensor({params.get("motion").rows(), cfg.output_dim()}, rng);
                       return grad_check(
                           [&](ParamBinding& b) {
                             auto enc = encode(b("motion"), cfg, b);
                             Var out = project(enc.states, w);
                             if (enc.final_forward) out = out + sum(*enc.final_forward);
                             return out;
                           },
                           params);
                     }});
  }

  cases.push_back({"gaussian_window", [](R& rng) {
                     const auto T = random_dim(rng, 4, 12);
                     const int D = static_cast<int>(random_dim(rng, 1, 3));
                     const bool mask = rng() % 2;
                     Tensor raw = random_tensor({T}, rng, 0.0, 1.0);
                     // Keep the position off the rounding boundaries.
                     const double p = std::floor(random_tensor({}, rng, 0.0, T - 1.0).item()) +
                                      random_tensor({}, rng, -0.4, 0.4).item();
                     const SegmentInterval seg = window_segment(p, D, T);
                     Tensor w = random_tensor({T}, rng);
                     const Tensor pts[] = {raw, Tensor::scalar(p)};
                     return grad_check(
                         [&](Tape&, std::span<const Var> v) {
                           return project(gaussian_window(v[0], v[1], D / 2.0, mask, seg), w);
                         },
                         pts);
                   }});
  cases.push_back({"context_vector", [](R& rng) {
                     const auto T = random_dim(rng, 3, 8);
                     const int lo = static_cast<int>(random_dim(rng, 0, T - 2));
                     const SegmentInterval seg{lo, static_cast<int>(random_dim(rng, lo + 1, T))};
                     const bool mask = rng() % 2;
                     ParameterSet params;
                     params.add("a", random_tensor({T}, rng));
                     params.add("s", random_tensor({T, random_dim(rng, 1, 4)}, rng));
                     Tensor w = random_tensor({params.get("s").cols()}, rng);
                     return grad_check(
                         [&](ParamBinding& b) {
                           EncoderOutputs enc{b("s"), T, std::nullopt};
                           return project(context_vector(b("a"), enc, mask, seg), w);
                         },
                         params);
                   }});
  for (AttentionMode mode : {AttentionMode::soft, AttentionMode::local, AttentionMode::local_recurrent}) {
    cases.push_back({"attend_" + to_string(mode), [mode](R& rng) {
                       for (;;) {
                         AttentionConfig cfg;
                         cfg.mode = mode;
                         cfg.window = 2;
                         cfg.mask = rng() % 2;
                         cfg.overlap = random_tensor({}, rng, 0.0, 1.0).item();
                         const auto T = random_dim(rng, 3, 9), n = random_dim(rng, 2, 4), m = random_dim(rng, 2, 4);
                         ParameterSet params;
                         init_attention_params(cfg, n, m, params, rng);
                         params.add("h", random_tensor({n}, rng));
                         params.add("p", Tensor::scalar(random_tensor({}, rng, 0.0, T / 2.0).item()));
                         params.add("s", random_tensor({T, m}, rng));
                         Tensor w = random_tensor({m}, rng);
                         auto run = [&](ParamBinding& b) {
                           EncoderOutputs enc{b("s"), T, std::nullopt};
                           Var keys = attention_keys(enc, b);
                           std::optional<Var> p_prev;
                           if (mode == AttentionMode::local_recurrent) p_prev = b("p");
                           return attend(cfg, b("h"), p_prev, keys, enc, b);
                         };
                         {
                           Tape probe(false);
                           ParamBinding b(probe, params);
                           auto step = run(b);
                           if (step.position && near_rounding_boundary(step.position->item())) continue;
                         }
                         return grad_check(
                             [&](ParamBinding& b) {
                               auto step = run(b);
                               Var out = project(step.context, w);
                               if (step.position) out = out + scale(*step.position, 0.1);
                               return out;
                             },
                             params);
                       }
                     }});
  }
  for (EncoderKind enc : {EncoderKind::mlp, EncoderKind::gru, EncoderKind::bigru}) {
    for (AttentionMode mode : {AttentionMode::soft, AttentionMode::local, AttentionMode::local_recurrent}) {
      cases.push_back({"decode_step_" + to_string(enc) + "_" + to_string(mode),
                       [enc, mode](R& rng) { return decode_steps_case(rng, enc, mode, rng() % 2 == 0); }});
    }
  }
  return cases;
}

}  // namespace m2t::testing

namespace m2t::testing {

/// Greedy decode of a random tiny model on a random motion. Decoding always
/// runs to max_len so traces have several steps.
inline GenerationResult random_trace(std::mt19937_64& rng, const AttentionConfig& attention,
                                     std::size_t max_len = 12) {
  ModelConfig cfg = tiny_model_config(EncoderKind::mlp, attention.mode, attention.mask);
  cfg.attention = attention;
  cfg.decoder.max_len = max_len;
  Model model = random_model(cfg, rng, 1.5);
  // Forbid <eos> so the trace is as long as possible.
  model.params().get("out.b")[special::eos] = -1e3;
  const Tensor motion = random_tensor({random_dim(rng, 4, 40), cfg.encoder.input_dim}, rng);
  return greedy_decode(model, motion, max_len);
}

}  // namespace m2t::testing
