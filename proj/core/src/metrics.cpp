#include "m2t/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "m2t/embedding.hpp"
#include "m2t/errors.hpp"

namespace m2t {
namespace {

using NGramCounts = std::map<std::vector<std::string>, std::size_t>;

NGramCounts ngrams(const Sentence& s, std::size_t n) {
  NGramCounts out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[Sentence(s.begin() + i, s.begin() + i + n)];
  return out;
}

}  // namespace

BleuReport bleu(std::span<const Sentence> predictions, std::span<const std::vector<Sentence>> references,
                const BleuOptions& options) {
  if (predictions.empty()) throw ArgumentError("BLEU over an empty corpus");
  if (predictions.size() != references.size()) throw ArgumentError("one reference set per prediction");
  if (options.max_order == 0) throw ArgumentError("BLEU order must be positive");
  const std::size_t N = options.max_order;
  BleuReport r;
  r.matches.assign(N, 0);
  r.totals.assign(N, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& hyp = predictions[i];
    const auto& refs = references[i];
    if (refs.empty()) throw ArgumentError("sample " + std::to_string(i) + " has no reference");
    r.hypothesis_length += hyp.size();
    std::size_t best = refs.front().size();
    for (const auto& ref : refs) {
      const auto d = [&](std::size_t len) { return len > hyp.size() ? len - hyp.size() : hyp.size() - len; };
      if (d(ref.size()) < d(best) || (d(ref.size()) == d(best) && ref.size() < best)) best = ref.size();
    }
    r.reference_length += best;
    for (std::size_t n = 1; n <= N; ++n) {
      NGramCounts max_ref;
      for (const auto& ref : refs)
        for (const auto& [g, c] : ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], c);
      for (const auto& [g, c] : ngrams(hyp, n)) {
        auto it = max_ref.find(g);
        r.matches[n - 1] += std::min(c, it == max_ref.end() ? std::size_t{0} : it->second);
        r.totals[n - 1] += c;
      }
    }
  }
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < N; ++n) {
    double num = static_cast<double>(r.matches[n]), den = static_cast<double>(r.totals[n]);
    if (options.smoothing && n > 0) {
      num += 1.0;
      den += 1.0;
    }
    const double p = den > 0 ? num / den : 0.0;
    r.precisions.push_back(p);
    if (p <= 0) zero = true;
    else log_sum += std::log(p) / static_cast<double>(N);
  }
  const double c = static_cast<double>(r.hypothesis_length), ref = static_cast<double>(r.reference_length);
  r.brevity_penalty = c == 0 ? 0.0 : (c > ref ? 1.0 : std::exp(1.0 - ref / c));
  r.score = zero ? 0.0 : r.brevity_penalty * std::exp(log_sum);
  return r;
}

double bleu4(std::span<const Sentence> predictions, std::span<const std::vector<Sentence>> references,
             bool smoothing) {
  return bleu(predictions, references, {4, smoothing}).score;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ArgumentError("cosine similarity of vectors of different sizes");
  double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0 || vv == 0) throw ArgumentError("cosine similarity of a zero vector");
  return std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0);
}

double semantic_score(std::span<const std::vector<std::string>> references,
                      std::span<const std::vector<std::string>> predictions, const EmbeddingProvider& provider) {
  if (references.size() != predictions.size()) throw ArgumentError("one reference set per prediction set");
  if (references.empty()) throw ArgumentError("semantic score over an empty corpus");
  auto embed = [&](const std::string& s) {
    try {
      return provider.embed(s);
    } catch (const std::exception& e) {
      throw ArgumentError("cannot embed \"" + s + "\": " + e.what());
    }
  };
  double total = 0.0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    if (references[i].empty() || predictions[i].empty()) {
      throw ArgumentError("sample " + std::to_string(i) + " needs at least one reference and prediction");
    }
    std::vector<std::vector<double>> refs;
    for (const auto& r : references[i]) refs.push_back(embed(r));
    double sample = 0.0;
    for (const auto& p : predictions[i]) {
      const auto e = embed(p);
      double best = -1.0;
      for (const auto& r : refs) best = std::max(best, cosine_similarity(e, r));
      sample += best;
    }
    total += sample / static_cast<double>(predictions[i].size());
  }
  return total / static_cast<double>(references.size());
}

}  // namespace m2t
