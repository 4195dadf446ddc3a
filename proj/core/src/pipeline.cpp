#include "m2t/pipeline.hpp"

#include <thread>

#include "m2t/errors.hpp"
#include "m2t/text.hpp"

namespace m2t {

Vocabulary build_vocab(std::span<const MotionSample> samples, std::size_t min_freq) {
  if (samples.empty()) throw ArgumentError("cannot build a vocabulary from zero samples");
  std::vector<std::vector<std::string>> sentences;
  for (const auto& s : samples)
    for (const auto& d : s.descriptions) sentences.push_back(tokenize(d));
  return Vocabulary::build(sentences, min_freq);
}

Normalizer fit_normalizer(std::span<const MotionSample> samples) {
  std::vector<Tensor> motions;
  motions.reserve(samples.size());
  for (const auto& s : samples) motions.push_back(s.frames);
  return Normalizer::fit(motions);
}

std::vector<TrainingExample> make_examples(std::span<const MotionSample> samples, const Vocabulary& vocab,
                                           const Normalizer& normalizer) {
  std::vector<TrainingExample> out;
  for (const auto& s : samples) {
    Tensor motion = normalizer.apply(s.frames);
    for (const auto& d : s.descriptions) out.push_back({motion, vocab.encode(tokenize(d))});
  }
  return out;
}

Sentence Prediction::sentence() const {
  Sentence out = words;
  if (!out.empty() && out.back() == kEosWord) out.pop_back();
  return out;
}

Prediction predict(const Model& model, const Vocabulary& vocab, const MotionSample& sample, std::size_t beam_size) {
  Prediction p;
  p.id = sample.id;
  const auto max_len = model.config().decoder.max_len;
  p.result = beam_size <= 1 ? greedy_decode(model, sample.frames, max_len)
                            : beam_decode(model, sample.frames, beam_size, max_len).front();
  p.words = vocab.decode(p.result.tokens);
  return p;
}

std::vector<Prediction> predict_all(const Model& model, const Vocabulary& vocab,
                                    std::span<const MotionSample> samples, std::size_t beam_size,
                                    std::size_t workers) {
  std::vector<Prediction> out(samples.size());
  workers = std::max<std::size_t>(1, std::min(workers, samples.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = predict(model, vocab, samples[i], beam_size);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < samples.size(); i += workers) out[i] = predict(model, vocab, samples[i], beam_size);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

BleuReport corpus_bleu(std::span<const Prediction> predictions, std::span<const MotionSample> samples,
                       bool smoothing) {
  if (predictions.size() != samples.size()) throw ArgumentError("one prediction per sample");
  std::vector<Sentence> hyps;
  std::vector<std::vector<Sentence>> refs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    hyps.push_back(predictions[i].sentence());
    std::vector<Sentence> r;
    for (const auto& d : samples[i].descriptions) r.push_back(tokenize(d));
    refs.push_back(std::move(r));
  }
  return bleu(hyps, refs, {4, smoothing});
}

SegmentationInput segmentation_input(const Prediction& prediction, const MotionSample& sample) {
  if (!sample.annotation) throw ArgumentError("sample " + sample.id + " has no annotation");
  return {sample.id, prediction.words, prediction.result.segments, prediction.result.positions, *sample.annotation};
}

}  // namespace m2t
