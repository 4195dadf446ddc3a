#pragma once

#include <span>
#include <string>
#include <vector>

#include "m2t/dataset.hpp"
#include "m2t/decoder.hpp"
#include "m2t/metrics.hpp"
#include "m2t/segmentation.hpp"
#include "m2t/training.hpp"
#include "m2t/vocabulary.hpp"

namespace m2t {

/// Vocabulary over the tokenized descriptions of `samples`.
Vocabulary build_vocab(std::span<const MotionSample> samples, std::size_t min_freq);

Normalizer fit_normalizer(std::span<const MotionSample> samples);

/// One example per description, motions normalised with `normalizer`.
std::vector<TrainingExample> make_examples(std::span<const MotionSample> samples, const Vocabulary& vocab,
                                           const Normalizer& normalizer);

struct Prediction {
  std::string id;
  GenerationResult result;
  /// Decoded words, including the final "<eos>" when present.
  std::vector<std::string> words;

  /// Words without <eos>.
  Sentence sentence() const;
};

/// Greedy when beam_size is 1, otherwise the top beam hypothesis.
Prediction predict(const Model& model, const Vocabulary& vocab, const MotionSample& sample,
                   std::size_t beam_size = 1);
/// Runs over `workers` threads; output order follows `samples`.
std::vector<Prediction> predict_all(const Model& model, const Vocabulary& vocab,
                                    std::span<const MotionSample> samples, std::size_t beam_size = 1,
                                    std::size_t workers = 1);

/// Corpus BLEU of predictions against the tokenized sample descriptions.
BleuReport corpus_bleu(std::span<const Prediction> predictions, std::span<const MotionSample> samples,
                       bool smoothing = false);

/// Pairs a prediction with its sample's annotation. ArgumentError when the
/// sample has none.
SegmentationInput segmentation_input(const Prediction& prediction, const MotionSample& sample);

}  // namespace m2t
