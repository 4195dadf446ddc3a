#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "m2t/annotation.hpp"
#include "m2t/interval.hpp"

namespace m2t {

/// Action-word positions k_0 < … < k_{n_s−1} in a predicted sentence and the
/// position k_e of its <eos>.
struct WordAlignment {
  std::vector<std::size_t> k;
  std::size_t eos = 0;

  std::size_t segment_count() const noexcept { return k.size(); }
  /// Word-index range ⟦k_m, k_{m+1}⟦; the last segment ends after <eos>.
  std::size_t segment_begin(std::size_t m) const { return k.at(m); }
  std::size_t segment_end(std::size_t m) const { return m + 1 < k.size() ? k[m + 1] : eos + 1; }
};

struct MotionSegment {
  /// Covering interval of the member word windows.
  SegmentInterval interval;
  /// The member windows leave at least one frame of the cover uncovered.
  bool gap = false;
};

struct SegmentationResult {
  WordAlignment alignment;
  std::vector<MotionSegment> motion_segments;
};

/// Greedy left-to-right search: k_m is the first occurrence of w_m after
/// k_{m−1}. nullopt when some action word is missing in order. The last token
/// must be `eos_word` (ArgumentError otherwise).
std::optional<WordAlignment> language_segmentation(std::span<const std::string> tokens,
                                                   std::span<const std::string> action_words,
                                                   std::string_view eos_word = "<eos>");

/// P_m = ⋃ S_i over the words of segment m. Empty windows do not contribute.
std::vector<MotionSegment> motion_segmentation(std::span<const SegmentInterval> word_segments,
                                               const WordAlignment& alignment);

/// |P∩G| / |P∪G| over integer frames; 0 when both are empty.
double iou(SegmentInterval p, SegmentInterval g) noexcept;
/// |P∩G| / |P|; 0 for empty P.
double iop(SegmentInterval p, SegmentInterval g) noexcept;

/// Mean of 1[v ≥ θ] over `per_segment`, or the plain mean when θ is unset.
/// Throws ArgumentError on an empty list.
double aggregate(std::span<const double> per_segment, std::optional<double> theta);

/// Per-sample S_seg for IoU. nullopt when the counts differ.
std::optional<double> iou_score(std::span<const SegmentInterval> predicted,
                                std::span<const SegmentInterval> truth, std::optional<double> theta);
std::optional<double> iop_score(std::span<const SegmentInterval> predicted,
                                std::span<const SegmentInterval> truth, std::optional<double> theta);

/// Fraction of each segment's words whose round(p_i) lies in G_m.
/// UnsupportedModeError when no positions are available.
std::vector<double> element_of_per_segment(std::span<const double> positions, const WordAlignment& alignment,
                                           std::span<const SegmentInterval> truth);
double element_of_score(std::span<const double> positions, const WordAlignment& alignment,
                        std::span<const SegmentInterval> truth, std::optional<double> theta = std::nullopt);

/// What segmentation needs from one decoded sample.
struct SegmentationInput {
  std::string id;
  /// Predicted words, normally ending in "<eos>".
  std::vector<std::string> tokens;
  /// S_i per token.
  std::vector<SegmentInterval> word_segments;
  /// p_i per token; empty for soft attention.
  std::vector<double> positions;
  GroundTruthAnnotation truth;
};

struct SampleSegmentation {
  std::string id;
  SegmentationResult result;
  std::vector<double> iou;
  std::vector<double> iop;
  /// Unset for soft attention.
  std::optional<std::vector<double>> element_of;
};

/// nullopt when the sample is not alignable: no <eos>, or an action word
/// missing in order.
std::optional<SampleSegmentation> segment_sample(const SegmentationInput& input);

struct CorpusReport {
  std::vector<double> thetas;
  /// Indexed like `thetas`.
  std::vector<double> iou;
  std::vector<double> iop;
  std::vector<double> element_of;
  double iou_continuous = 0.0;
  double iop_continuous = 0.0;
  std::optional<double> element_of_continuous;
  std::size_t scored = 0;
  std::vector<std::string> excluded;
  std::vector<SampleSegmentation> samples;
};

/// θ = 0, 0.1, …, 1.
std::vector<double> default_theta_grid();

/// Means over alignable samples. ArgumentError when none are alignable.
CorpusReport corpus_scores(std::span<const SegmentationInput> inputs, std::span<const double> thetas);
CorpusReport corpus_scores(std::span<const SampleSegmentation> samples, std::span<const double> thetas,
                           std::vector<std::string> excluded = {});

}  // namespace m2t
