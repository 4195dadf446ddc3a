#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "gradcases.hpp"
#include "m2t/checkpoint.hpp"
#include "m2t/errors.hpp"

using namespace m2t;
using namespace m2t::testing;

namespace {

std::filesystem::path tmp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

Checkpoint sample_checkpoint(EncoderKind enc) {
  std::mt19937_64 rng(7);
  auto cfg = tiny_model_config(enc, AttentionMode::local_recurrent, true);
  Model model = random_model(cfg, rng);
  Normalizer n = Normalizer::identity(cfg.encoder.input_dim);
  n.mean[1] = 0.1 + 1e-17;
  n.stddev[2] = 1.0 / 3.0;
  model.set_normalizer(n);
  Checkpoint ck{model, Vocabulary::from_words({"<pad>", "<sos>", "<eos>", "<unk>", "a", "b", "c"}),
                TrainingConfig{}, {1.5, 0.25, 1.0 / 7.0}};
  return ck;
}

}  // namespace

TEST_CASE("checkpoint reload is bit exact") {
  for (EncoderKind enc : {EncoderKind::mlp, EncoderKind::gru, EncoderKind::bigru}) {
    auto ck = sample_checkpoint(enc);
    auto path = tmp("m2t_ck.json");
    save_checkpoint(path, ck);
    auto back = load_checkpoint(path);
    CHECK(back.model.params() == ck.model.params());
    CHECK(back.model.normalizer() == ck.model.normalizer());
    CHECK(back.vocabulary == ck.vocabulary);
    CHECK(back.loss_curve == ck.loss_curve);
    REQUIRE(back.training);
    CHECK(to_json(*back.training) == to_json(*ck.training));
    CHECK(to_json(back.model.config()) == to_json(ck.model.config()));
    std::filesystem::remove(path);
  }
}

TEST_CASE("checkpoint errors") {
  auto ck = sample_checkpoint(EncoderKind::mlp);
  auto path = tmp("m2t_ck_bad.json");
  save_checkpoint(path, ck);
  nlohmann::json j;
  {
    std::ifstream in(path);
    in >> j;
  }
  auto rewrite = [&](const nlohmann::json& doc) {
    std::ofstream out(path);
    out << doc.dump();
  };

  CHECK_THROWS_AS(load_checkpoint(tmp("m2t_no_such_checkpoint.json")), IoError);

  auto v = j;
  v["format_version"] = kCheckpointVersion + 1;
  rewrite(v);
  CHECK_THROWS_AS(load_checkpoint(path), VersionError);

  auto shape = j;
  shape["params"][0]["shape"] = {99};
  rewrite(shape);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);

  auto missing = j;
  missing["params"].erase(0);
  rewrite(missing);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);

  {
    std::ofstream out(path);
    out << "{ truncated";
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("config json round trip") {
  auto cfg = tiny_model_config(EncoderKind::bigru, AttentionMode::local, false);
  CHECK(to_json(model_config_from_json(to_json(cfg))) == to_json(cfg));
  TrainingConfig tc;
  tc.beta = 0.0;
  tc.epochs = 17;
  CHECK(to_json(training_config_from_json(to_json(tc))) == to_json(tc));
}
