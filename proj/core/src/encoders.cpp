#include "m2t/encoders.hpp"

#include "m2t/errors.hpp"
#include "m2t/ops.hpp"

namespace m2t {

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::gru: return "gru";
    case EncoderKind::bigru: return "bigru";
    case EncoderKind::mlp: return "mlp";
  }
  return "?";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "gru") return EncoderKind::gru;
  if (name == "bigru") return EncoderKind::bigru;
  if (name == "mlp") return EncoderKind::mlp;
  throw ConfigError("unknown encoder kind '" + std::string(name) + "'");
}

std::size_t EncoderConfig::output_dim() const {
  if (kind == EncoderKind::mlp) return mlp_dims.empty() ? 0 : mlp_dims.back();
  return direction_multiplier() * hidden_dim;
}

void EncoderConfig::validate() const {
  if (input_dim == 0) throw ConfigError("encoder input_dim must be positive");
  if (kind == EncoderKind::mlp) {
    if (mlp_dims.empty()) throw ConfigError("mlp encoder needs at least one layer");
    for (auto d : mlp_dims)
      if (d == 0) throw ConfigError("mlp layer width must be positive");
  } else if (hidden_dim == 0) {
    throw ConfigError("gru hidden_dim must be positive");
  }
}

std::size_t encoder_param_count(const EncoderConfig& cfg) {
  const std::size_t in = cfg.input_dim, n = cfg.hidden_dim;
  switch (cfg.kind) {
    case EncoderKind::gru: return 3 * (n * in + n * n + n);
    case EncoderKind::bigru: return 2 * 3 * (n * in + n * n + n);
    case EncoderKind::mlp: {
      std::size_t total = 0, prev = in;
      for (auto d : cfg.mlp_dims) {
        total += prev * d + d;
        prev = d;
      }
      return total;
    }
  }
  return 0;
}

void init_gru_params(std::string_view prefix, std::size_t input_dim, std::size_t hidden_dim,
                     ParameterSet& params, std::mt19937_64& rng) {
  const std::string p(prefix);
  for (const char* gate : {"z", "r", "h"}) {
    params.add(p + ".W_" + gate, init_uniform({hidden_dim, input_dim}, hidden_dim, rng));
    params.add(p + ".U_" + gate, init_uniform({hidden_dim, hidden_dim}, hidden_dim, rng));
    params.add(p + ".b_" + gate, init_uniform({hidden_dim}, hidden_dim, rng));
  }
}

void init_encoder_params(const EncoderConfig& cfg, ParameterSet& params, std::mt19937_64& rng) {
  cfg.validate();
  switch (cfg.kind) {
    case EncoderKind::gru:
      init_gru_params("enc.fwd", cfg.input_dim, cfg.hidden_dim, params, rng);
      break;
    case EncoderKind::bigru:
      init_gru_params("enc.fwd", cfg.input_dim, cfg.hidden_dim, params, rng);
      init_gru_params("enc.bwd", cfg.input_dim, cfg.hidden_dim, params, rng);
      break;
    case EncoderKind::mlp: {
      std::size_t prev = cfg.input_dim;
      for (std::size_t i = 0; i < cfg.mlp_dims.size(); ++i) {
        const std::size_t d = cfg.mlp_dims[i];
        params.add("enc.mlp" + std::to_string(i) + ".W", init_uniform({d, prev}, prev, rng));
        params.add("enc.mlp" + std::to_string(i) + ".b", init_uniform({d}, prev, rng));
        prev = d;
      }
      break;
    }
  }
}

GruWeights GruWeights::bind(ParamBinding& b, std::string_view prefix) {
  const std::string p(prefix);
  return GruWeights{b(p + ".W_z"), b(p + ".W_r"), b(p + ".W_h"), b(p + ".U_z"), b(p + ".U_r"),
                    b(p + ".U_h"), b(p + ".b_z"), b(p + ".b_r"), b(p + ".b_h"), p};
}

namespace {

void check_gru_dims(const GruWeights& w, const Var& x, const Var& h) {
  const std::size_t n = w.hidden_dim();
  const std::pair<const Var*, const char*> checks[] = {
      {&w.w_z, ".W_z"}, {&w.w_r, ".W_r"}, {&w.w_h, ".W_h"}};
  for (auto [v, name] : checks) {
    if (v->value().rank() != 2 || v->value().cols() != x.size() || v->value().rows() != n) {
      throw DimensionError("gru " + w.prefix + name + " has shape " + shape_string(v->shape()) +
                           " but input has " + std::to_string(x.size()) + " values");
    }
  }
  if (h.size() != n) {
    throw DimensionError("gru " + w.prefix + ".U_z expects state size " + std::to_string(n) + ", got " +
                         std::to_string(h.size()));
  }
}

// GRU step with the input projections W·x already computed.
Var gru_step_projected(const GruWeights& w, const Var& xz, const Var& xr, const Var& xh, const Var& h) {
  Var z = sigmoid(xz + matvec(w.u_z, h) + w.b_z);
  Var r = sigmoid(xr + matvec(w.u_r, h) + w.b_r);
  Var cand = tanh(xh + matvec(w.u_h, r * h) + w.b_h);
  return (1.0 - z) * cand + z * h;
}

struct GruPass {
  std::vector<Var> states;
};

GruPass run_gru(const GruWeights& w, const Var& motion, std::size_t length, bool reverse) {
  // Project every frame at once: [T×in]·[n×in]ᵀ → [T×n].
  Var pz = matmul_nt(motion, w.w_z);
  Var pr = matmul_nt(motion, w.w_r);
  Var ph = matmul_nt(motion, w.w_h);
  Var h = motion.tape().constant(Tensor(Shape{w.hidden_dim()}));
  GruPass pass;
  pass.states.resize(length);
  for (std::size_t k = 0; k < length; ++k) {
    const std::size_t t = reverse ? length - 1 - k : k;
    h = gru_step_projected(w, row(pz, t), row(pr, t), row(ph, t), h);
    pass.states[t] = h;
  }
  return pass;
}

}  // namespace

Var gru_cell_step(const GruWeights& w, const Var& x, const Var& h_prev) {
  check_gru_dims(w, x, h_prev);
  return gru_step_projected(w, matvec(w.w_z, x), matvec(w.w_r, x), matvec(w.w_h, x), h_prev);
}

EncoderOutputs encode(const Var& motion, const EncoderConfig& cfg, ParamBinding& binding) {
  const Tensor& x = motion.value();
  if (x.rank() != 2 || x.rows() == 0) throw ArgumentError("encode: motion must have at least one frame");
  if (x.cols() != cfg.input_dim) {
    throw DimensionError("encode: frame width " + std::to_string(x.cols()) + " but encoder expects " +
                         std::to_string(cfg.input_dim));
  }
  const std::size_t length = x.rows();
  EncoderOutputs out;
  out.length = length;
  switch (cfg.kind) {
    case EncoderKind::mlp: {
      Var s = motion;
      for (std::size_t i = 0; i < cfg.mlp_dims.size(); ++i) {
        const std::string p = "enc.mlp" + std::to_string(i);
        s = tanh(matmul_nt(s, binding(p + ".W")) + binding(p + ".b"));
      }
      out.states = s;
      break;
    }
    case EncoderKind::gru: {
      GruWeights fw = GruWeights::bind(binding, "enc.fwd");
      if (fw.input_dim() != cfg.input_dim) throw DimensionError("enc.fwd.W_z does not match input width");
      GruPass pass = run_gru(fw, motion, length, false);
      out.final_forward = pass.states.back();
      out.states = stack_rows(pass.states);
      break;
    }
    case EncoderKind::bigru: {
      GruWeights fw = GruWeights::bind(binding, "enc.fwd");
      GruWeights bw = GruWeights::bind(binding, "enc.bwd");
      if (fw.input_dim() != cfg.input_dim) throw DimensionError("enc.fwd.W_z does not match input width");
      GruPass f = run_gru(fw, motion, length, false);
      GruPass b = run_gru(bw, motion, length, true);
      out.final_forward = f.states.back();
      out.states = concat({stack_rows(f.states), stack_rows(b.states)}, 1);
      break;
    }
  }
  return out;
}

}  // namespace m2t
