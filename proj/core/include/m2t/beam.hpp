#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "m2t/errors.hpp"
#include "m2t/interval.hpp"
#include "m2t/model.hpp"

namespace m2t {

/// What a decoding step looked at, kept per emitted token.
struct StepTrace {
  std::vector<double> weights;
  std::vector<double> raw;
  std::optional<double> position;
  SegmentInterval segment;
};

/// Result of expanding a hypothesis by one step: log-probabilities over the
/// vocabulary for the next token plus the successor state.
template <class State>
struct Expansion {
  std::vector<double> log_probs;
  State next;
  StepTrace trace;
};

template <class State>
struct Hypothesis {
  std::vector<TokenId> tokens;
  std::vector<double> log_probs;
  std::vector<StepTrace> traces;
  double score = 0.0;
  double normalized_score = 0.0;
  State state;
};

struct SearchOptions {
  std::size_t beam_size = 1;
  std::size_t max_len = 30;
  double length_penalty = 0.7;
  TokenId eos = special::eos;
  TokenId sos = special::sos;
};

inline double normalize_score(double score, std::size_t length, double penalty) {
  return score / std::pow(static_cast<double>(length), penalty);
}

/// Greedy search: argmax at every step, ties to the lowest token id.
/// Session must provide `State initial()` and
/// `Expansion<State> expand(const State&, TokenId prev)`.
template <class Session>
Hypothesis<typename Session::State> greedy_search(Session& session, const SearchOptions& opt) {
  if (opt.max_len == 0) throw ArgumentError("max_len must be >= 1");
  Hypothesis<typename Session::State> hyp{{}, {}, {}, 0.0, 0.0, session.initial()};
  TokenId prev = opt.sos;
  while (hyp.tokens.size() < opt.max_len) {
    auto ex = session.expand(hyp.state, prev);
    TokenId best = 0;
    for (TokenId t = 1; t < ex.log_probs.size(); ++t)
      if (ex.log_probs[t] > ex.log_probs[best]) best = t;
    hyp.tokens.push_back(best);
    hyp.log_probs.push_back(ex.log_probs[best]);
    hyp.score += ex.log_probs[best];
    hyp.traces.push_back(std::move(ex.trace));
    hyp.state = std::move(ex.next);
    prev = best;
    if (best == opt.eos) break;
  }
  hyp.normalized_score = normalize_score(hyp.score, hyp.tokens.size(), opt.length_penalty);
  return hyp;
}

/// Shrinking-beam search. Each step keeps the best `beam_size − finished`
/// extensions by cumulative log-probability; a hypothesis finishes on eos or
/// at max_len. Finished hypotheses are returned by descending normalized
/// score. With beam_size = 1 this reproduces greedy_search exactly.
template <class Session>
std::vector<Hypothesis<typename Session::State>> beam_search(Session& session, const SearchOptions& opt) {
  using State = typename Session::State;
  if (opt.beam_size < 1) throw ArgumentError("beam size must be >= 1");
  if (opt.max_len == 0) throw ArgumentError("max_len must be >= 1");

  struct Candidate {
    std::size_t parent;
    TokenId token;
    double score;
    double log_prob;
  };

  std::vector<Hypothesis<State>> active(1);
  active[0].state = session.initial();
  std::vector<Hypothesis<State>> finished;

  for (std::size_t t = 0; t < opt.max_len && !active.empty(); ++t) {
    std::vector<Expansion<State>> expansions;
    std::vector<Candidate> cands;
    for (std::size_t h = 0; h < active.size(); ++h) {
      const TokenId prev = active[h].tokens.empty() ? opt.sos : active[h].tokens.back();
      expansions.push_back(session.expand(active[h].state, prev));
      const auto& lp = expansions.back().log_probs;
      for (TokenId tok = 0; tok < lp.size(); ++tok) cands.push_back({h, tok, active[h].score + lp[tok], lp[tok]});
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      return a.token < b.token;
    });
    const std::size_t slots = std::min(cands.size(), opt.beam_size - finished.size());
    std::vector<Hypothesis<State>> next;
    for (std::size_t c = 0; c < slots; ++c) {
      const Candidate& cand = cands[c];
      Hypothesis<State> hyp;
      hyp.tokens = active[cand.parent].tokens;
      hyp.log_probs = active[cand.parent].log_probs;
      hyp.traces = active[cand.parent].traces;
      hyp.tokens.push_back(cand.token);
      hyp.log_probs.push_back(cand.log_prob);
      hyp.traces.push_back(expansions[cand.parent].trace);
      hyp.score = cand.score;
      hyp.state = expansions[cand.parent].next;
      if (cand.token == opt.eos || t + 1 == opt.max_len) {
        hyp.normalized_score = normalize_score(hyp.score, hyp.tokens.size(), opt.length_penalty);
        finished.push_back(std::move(hyp));
      } else {
        next.push_back(std::move(hyp));
      }
    }
    active = std::move(next);
  }

  std::stable_sort(finished.begin(), finished.end(), [](const auto& a, const auto& b) {
    return a.normalized_score > b.normalized_score;
  });
  return finished;
}

}  // namespace m2t
