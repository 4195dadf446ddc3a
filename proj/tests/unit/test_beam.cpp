#include <doctest.h>

#include "gradcases.hpp"
#include "m2t/beam.hpp"
#include "m2t/decoder.hpp"
#include "oracles.hpp"

using namespace m2t;
using namespace m2t::testing;

TEST_CASE("beam of one equals greedy on random sessions") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    oracle::RandomSession s(6, seed);
    SearchOptions opt;
    opt.max_len = 7;
    auto g = greedy_search(s, opt);
    auto b = beam_search(s, opt);
    REQUIRE(b.size() == 1);
    CHECK(b[0].tokens == g.tokens);
    CHECK(b[0].score == g.score);
  }
}

TEST_CASE("an exhaustive beam finds the enumerated optimum") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    oracle::RandomSession s(5, seed);
    SearchOptions opt;
    opt.max_len = 4;
    opt.beam_size = 625;
    auto [best, score] = oracle::exhaustive_best(s, opt);
    auto hyps = beam_search(s, opt);
    CHECK(hyps.front().tokens == best);
    CHECK(hyps.front().normalized_score == doctest::Approx(score).epsilon(1e-12));
    for (std::size_t i = 1; i < hyps.size(); ++i) CHECK(hyps[i - 1].normalized_score >= hyps[i].normalized_score);
  }
}

namespace {

// Two-step toy where the greedy first choice leads to a poor continuation.
struct Trap {
  using State = int;
  State initial() { return 0; }
  Expansion<State> expand(const State& depth, TokenId prev) {
    Expansion<State> e;
    e.next = depth + 1;
    if (depth == 0) {
      e.log_probs = {std::log(0.0001), std::log(0.0001), std::log(0.0002), std::log(0.55), std::log(0.4497)};
    } else if (prev == 3) {
      e.log_probs = {std::log(0.25), std::log(0.25), std::log(0.25), std::log(0.25), -1e9};
    } else {
      e.log_probs = {-1e9, -1e9, 0.0, -1e9, -1e9};
    }
    return e;
  }
};

}  // namespace

TEST_CASE("beam search escapes a greedy trap") {
  Trap s;
  SearchOptions opt;
  opt.max_len = 2;
  auto g = greedy_search(s, opt);
  CHECK(g.tokens.front() == 3);
  opt.beam_size = 2;
  auto b = beam_search(s, opt);
  CHECK(b.front().tokens == std::vector<TokenId>{4, special::eos});
}

TEST_CASE("beam of one equals greedy on random models") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 30; ++i) {
    auto cfg = tiny_model_config(static_cast<EncoderKind>(i % 3), static_cast<AttentionMode>((i / 3) % 3), i % 2);
    Model model = random_model(cfg, rng, 1.5);
    Tensor x = random_tensor({random_dim(rng, 3, 12), 4}, rng);
    auto g = greedy_decode(model, x, 8);
    auto b = beam_decode(model, x, 1, 8);
    CHECK(b.front().tokens == g.tokens);
    CHECK(b.front().attention == g.attention);
  }
}

TEST_CASE("beam matches enumeration on a five-word model") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    auto cfg = tiny_model_config(EncoderKind::gru, AttentionMode::local_recurrent, true);
    cfg.decoder.vocab_size = 5;
    Model model = random_model(cfg, rng, 1.5);
    Tensor x = random_tensor({6, 4}, rng);
    Tape tape(false);
    ParamBinding binding(tape, model.params());
    DecodingContext ctx(model, binding, x);
    ModelSession session(ctx);
    SearchOptions opt;
    opt.max_len = 4;
    opt.length_penalty = cfg.decoder.length_penalty;
    auto [best, score] = oracle::exhaustive_best(session, opt);
    auto hyps = beam_decode(model, x, 625, 4);
    CHECK(hyps.front().tokens == best);
    CHECK(hyps.front().normalized_score == doctest::Approx(score).epsilon(1e-12));
  }
}
