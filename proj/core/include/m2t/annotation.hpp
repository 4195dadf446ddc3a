#pragma once

#include <string>
#include <vector>

#include "m2t/interval.hpp"

namespace m2t {

/// Action words w_m with their ground-truth frame intervals G_m.
struct GroundTruthAnnotation {
  std::vector<std::string> action_words;
  std::vector<SegmentInterval> segments;

  std::size_t size() const noexcept { return segments.size(); }
  /// Throws FormatError unless there is one non-degenerate interval per word,
  /// starting at frame ≥ 0, ordered and pairwise disjoint.
  void validate() const;
  /// validate() plus every interval ending at or before `frames`.
  void validate(int frames) const;

  friend bool operator==(const GroundTruthAnnotation&, const GroundTruthAnnotation&) = default;
};

}  // namespace m2t
