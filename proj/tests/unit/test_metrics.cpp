#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "m2t/embedding.hpp"
#include "m2t/errors.hpp"
#include "m2t/metrics.hpp"
#include "oracles.hpp"

using namespace m2t;

namespace {

Sentence random_sentence(std::mt19937_64& rng, std::size_t vocab) {
  Sentence s(1 + rng() % 12);
  for (auto& w : s) w = "w" + std::to_string(rng() % vocab);
  return s;
}

}  // namespace

TEST_CASE("bleu on identical and disjoint corpora") {
  std::vector<Sentence> hyp{{"a", "person", "walks", "forward", "slowly"}};
  std::vector<std::vector<Sentence>> refs{{hyp[0]}};
  CHECK(bleu4(hyp, refs) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<std::vector<Sentence>> other{{{"x", "y", "z", "u", "v"}}};
  CHECK(bleu4(hyp, other) == 0.0);
  CHECK(bleu4(hyp, other, true) == 0.0);
}

TEST_CASE("bleu brevity penalty and clipping") {
  std::vector<Sentence> hyp{{"the", "the", "the", "the"}};
  std::vector<std::vector<Sentence>> refs{{{"the", "cat", "is", "on", "the", "mat"}}};
  auto r = bleu(hyp, refs, {1, false});
  CHECK(r.matches[0] == 2);
  CHECK(r.precisions[0] == 0.5);
  CHECK(r.brevity_penalty == doctest::Approx(std::exp(1.0 - 6.0 / 4.0)));
  // Closest reference length, shorter on ties.
  std::vector<std::vector<Sentence>> two{{{"a", "b", "c"}, {"a", "b", "c", "d", "e"}}};
  std::vector<Sentence> four{{"a", "b", "c", "d"}};
  CHECK(bleu(four, two).reference_length == 3);
}

TEST_CASE("bleu agrees with the brute-force oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 8, vocab = 3 + rng() % 6;
    std::vector<Sentence> hyps;
    std::vector<std::vector<Sentence>> refs(n);
    for (std::size_t i = 0; i < n; ++i) {
      hyps.push_back(random_sentence(rng, vocab));
      for (std::size_t k = 0; k < 1 + rng() % 3; ++k) refs[i].push_back(random_sentence(rng, vocab));
    }
    CHECK(std::abs(bleu4(hyps, refs) - oracle::bleu4(hyps, refs)) <= 1e-9);
  }
}

TEST_CASE("bleu rejects mismatched inputs") {
  std::vector<Sentence> hyp{{"a"}};
  std::vector<std::vector<Sentence>> none;
  CHECK_THROWS_AS(bleu4(hyp, none), ArgumentError);
}

TEST_CASE("cosine similarity") {
  std::vector<double> a{1, 0, 0}, b{0, 2, 0}, c{3, 0, 0}, z{0, 0, 0};
  CHECK(cosine_similarity(a, b) == 0.0);
  CHECK(cosine_similarity(a, c) == doctest::Approx(1.0));
  std::vector<double> d{-1, 0, 0};
  CHECK(cosine_similarity(a, d) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(cosine_similarity(a, z), ArgumentError);
  CHECK_THROWS_AS(cosine_similarity(a, std::vector<double>{1, 0}), ArgumentError);
}

TEST_CASE("semantic score with hashed embeddings") {
  HashedBagOfWords emb;
  std::vector<std::vector<std::string>> refs{{"a person walks forward", "someone walks"}};
  std::vector<std::vector<std::string>> same{{"a person walks forward"}};
  CHECK(semantic_score(refs, same, emb) == doctest::Approx(1.0));
  std::vector<std::vector<std::string>> partial{{"a person walks forward", "zzz qqq"}};
  const double s = semantic_score(refs, partial, emb);
  CHECK(s > 0.4);
  CHECK(s < 0.6 + 1e-12);
  CHECK(emb.embed("A person walks.") == emb.embed("a person walks"));
}

TEST_CASE("file embedding provider") {
  auto path = std::filesystem::temp_directory_path() / "m2t_embeddings.jsonl";
  {
    std::ofstream out(path);
    out << R"({"sentence": "A person walks.", "vector": [1, 0]})" << "\n";
    out << R"({"sentence": "a person runs", "vector": [1, 1]})" << "\n";
  }
  FileEmbeddingProvider emb(path);
  CHECK(emb.size() == 2);
  CHECK(emb.dimension() == 2);
  CHECK(emb.embed("a person walks") == std::vector<double>{1, 0});
  std::vector<std::vector<std::string>> refs{{"a person walks"}}, preds{{"a person runs"}};
  CHECK(semantic_score(refs, preds, emb) == doctest::Approx(std::sqrt(0.5)));
  std::vector<std::vector<std::string>> unknown{{"nobody"}};
  CHECK_THROWS_AS(semantic_score(refs, unknown, emb), ArgumentError);
  CHECK_THROWS_AS(FileEmbeddingProvider("/nonexistent/embeddings.jsonl"), IoError);
  std::filesystem::remove(path);
}
