#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace m2t {

class EmbeddingProvider;

using Sentence = std::vector<std::string>;

struct BleuOptions {
  std::size_t max_order = 4;
  /// Add one to numerator and denominator for orders ≥ 2. Off by default, in
  /// which case any zero precision makes the score 0.
  bool smoothing = false;
};

struct BleuReport {
  double score = 0.0;
  double brevity_penalty = 0.0;
  /// Clipped n-gram precision per order.
  std::vector<double> precisions;
  std::vector<std::size_t> matches;
  std::vector<std::size_t> totals;
  std::size_t hypothesis_length = 0;
  /// Σ of the reference length closest to each hypothesis (shorter wins ties).
  std::size_t reference_length = 0;
};

/// Corpus BLEU with uniform weights and clipped counts. `references[i]` holds
/// the references of `predictions[i]`.
BleuReport bleu(std::span<const Sentence> predictions, std::span<const std::vector<Sentence>> references,
                const BleuOptions& options = {});
double bleu4(std::span<const Sentence> predictions, std::span<const std::vector<Sentence>> references,
             bool smoothing = false);

/// u·v / (‖u‖‖v‖). ArgumentError for zero vectors or mismatched sizes.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Mean over samples of (1/|P_i|) Σ_p max_r cos(emb(p), emb(r)).
double semantic_score(std::span<const std::vector<std::string>> references,
                      std::span<const std::vector<std::string>> predictions, const EmbeddingProvider& provider);

}  // namespace m2t
