#pragma once

#include <algorithm>
#include <ostream>

namespace m2t {

/// Half-open integer frame interval ⟦start, end⟦.
struct SegmentInterval {
  int start = 0;
  int end = 0;

  constexpr int size() const noexcept { return end > start ? end - start : 0; }
  constexpr bool empty() const noexcept { return end <= start; }
  constexpr bool contains(int frame) const noexcept { return frame >= start && frame < end; }

  friend constexpr bool operator==(const SegmentInterval&, const SegmentInterval&) = default;
};

constexpr SegmentInterval intersect(SegmentInterval a, SegmentInterval b) noexcept {
  SegmentInterval r{std::max(a.start, b.start), std::min(a.end, b.end)};
  if (r.end < r.start) r.end = r.start;
  return r;
}

/// |a ∩ b|
constexpr int overlap(SegmentInterval a, SegmentInterval b) noexcept { return intersect(a, b).size(); }

/// |a ∪ b| as a count of integer frames (the union need not be contiguous).
constexpr int union_size(SegmentInterval a, SegmentInterval b) noexcept {
  return a.size() + b.size() - overlap(a, b);
}

inline std::ostream& operator<<(std::ostream& os, const SegmentInterval& s) {
  return os << '[' << s.start << ',' << s.end << ')';
}

}  // namespace m2t
