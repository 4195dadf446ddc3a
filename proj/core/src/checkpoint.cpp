#include "m2t/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "m2t/errors.hpp"

namespace m2t {

using nlohmann::json;

namespace {

json encoder_json(const EncoderConfig& c) {
  return {{"kind", to_string(c.kind)}, {"input_dim", c.input_dim}, {"hidden_dim", c.hidden_dim},
          {"mlp_dims", c.mlp_dims}};
}

EncoderConfig encoder_from(const json& j) {
  EncoderConfig c;
  c.kind = parse_encoder_kind(j.at("kind").get<std::string>());
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.mlp_dims = j.at("mlp_dims").get<std::vector<std::size_t>>();
  return c;
}

json attention_json(const AttentionConfig& c) {
  json j = {{"mode", to_string(c.mode)}, {"window", c.window}, {"overlap", c.overlap},
            {"mask", c.mask}, {"causal", c.causal}};
  j["width"] = c.width ? json(*c.width) : json(nullptr);
  return j;
}

AttentionConfig attention_from(const json& j) {
  AttentionConfig c;
  c.mode = parse_attention_mode(j.at("mode").get<std::string>());
  c.window = j.at("window").get<int>();
  c.overlap = j.at("overlap").get<double>();
  c.mask = j.at("mask").get<bool>();
  c.causal = j.value("causal", false);
  if (j.contains("width") && !j["width"].is_null()) c.width = j["width"].get<double>();
  return c;
}

json decoder_json(const DecoderConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"embedding_dim", c.embedding_dim}, {"hidden_dim", c.hidden_dim},
          {"max_len", c.max_len}, {"length_penalty", c.length_penalty}};
}

DecoderConfig decoder_from(const json& j) {
  DecoderConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.length_penalty = j.at("length_penalty").get<double>();
  return c;
}

json model_json(const ModelConfig& c) {
  return {{"encoder", encoder_json(c.encoder)}, {"attention", attention_json(c.attention)},
          {"decoder", decoder_json(c.decoder)}};
}

ModelConfig model_from(const json& j) {
  ModelConfig c;
  c.encoder = encoder_from(j.at("encoder"));
  c.attention = attention_from(j.at("attention"));
  c.decoder = decoder_from(j.at("decoder"));
  return c;
}

json training_json(const TrainingConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"teacher_forcing", c.teacher_forcing},
          {"teacher_forcing_per_sequence", c.teacher_forcing_per_sequence}, {"beta", c.beta},
          {"batch_size", c.batch_size}, {"epochs", c.epochs}, {"seed", c.seed}, {"grad_clip", c.grad_clip},
          {"workers", c.workers}};
}

TrainingConfig training_from(const json& j) {
  TrainingConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.teacher_forcing = j.at("teacher_forcing").get<double>();
  c.teacher_forcing_per_sequence = j.at("teacher_forcing_per_sequence").get<bool>();
  c.beta = j.at("beta").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.grad_clip = j.at("grad_clip").get<double>();
  c.workers = j.at("workers").get<std::size_t>();
  return c;
}

}  // namespace

std::string to_json(const ModelConfig& config) { return model_json(config).dump(); }
std::string to_json(const TrainingConfig& config) { return training_json(config).dump(); }

ModelConfig model_config_from_json(const std::string& text) {
  try {
    return model_from(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
}

TrainingConfig training_config_from_json(const std::string& text) {
  try {
    return training_from(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("training config: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto& model = ck.model;
  json params = json::array();
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    const Tensor& t = model.params().at(i);
    params.push_back({{"name", model.params().name(i)},
                      {"shape", t.shape()},
                      {"values", std::vector<double>(t.values().begin(), t.values().end())}});
  }
  json doc = {{"format_version", kCheckpointVersion},
              {"model", model_json(model.config())},
              {"vocabulary", ck.vocabulary.words()},
              {"normalizer", {{"mean", model.normalizer().mean}, {"stddev", model.normalizer().stddev}}},
              {"params", std::move(params)},
              {"loss_curve", ck.loss_curve}};
  doc["training"] = ck.training ? training_json(*ck.training) : json(nullptr);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw FormatError(path.string() + ": not a checkpoint");
  }
  const auto version = doc["format_version"].get<int>();
  if (version != kCheckpointVersion) {
    throw VersionError(path.string() + ": checkpoint format " + std::to_string(version) + ", this build reads " +
                       std::to_string(kCheckpointVersion));
  }
  try {
    ModelConfig config = model_from(doc.at("model"));
    config.validate();
    ParameterSet params;
    for (const auto& p : doc.at("params")) {
      params.add(p.at("name").get<std::string>(),
                 Tensor(p.at("shape").get<Shape>(), p.at("values").get<std::vector<double>>()));
    }
    // Parameter names and shapes must match what the config implies.
    const Model fresh = Model::create(config, 0);
    if (fresh.params().size() != params.size()) throw FormatError("parameter count does not match the config");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (fresh.params().name(i) != params.name(i) || fresh.params().at(i).shape() != params.at(i).shape()) {
        throw FormatError("parameter '" + params.name(i) + "' does not match the config");
      }
    }
    Normalizer norm{doc.at("normalizer").at("mean").get<std::vector<double>>(),
                    doc.at("normalizer").at("stddev").get<std::vector<double>>()};
    if (norm.mean.size() != config.encoder.input_dim || norm.stddev.size() != config.encoder.input_dim) {
      throw FormatError("normalizer width does not match the encoder input");
    }
    Checkpoint ck{Model(config, std::move(params), std::move(norm)),
                  Vocabulary::from_words(doc.at("vocabulary").get<std::vector<std::string>>()), std::nullopt,
                  doc.value("loss_curve", std::vector<double>{})};
    if (ck.vocabulary.size() != config.decoder.vocab_size) {
      throw FormatError("vocabulary size does not match the decoder");
    }
    if (doc.contains("training") && !doc["training"].is_null()) ck.training = training_from(doc["training"]);
    return ck;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace m2t
