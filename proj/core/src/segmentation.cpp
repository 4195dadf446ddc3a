#include "m2t/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "m2t/errors.hpp"

namespace m2t {

std::optional<WordAlignment> language_segmentation(std::span<const std::string> tokens,
                                                   std::span<const std::string> action_words,
                                                   std::string_view eos_word) {
  if (tokens.empty() || tokens.back() != eos_word) {
    throw ArgumentError("language segmentation needs a sentence ending in " + std::string(eos_word));
  }
  if (action_words.empty()) throw ArgumentError("no action words to align");
  WordAlignment a;
  a.eos = tokens.size() - 1;
  std::size_t from = 0;
  for (const auto& w : action_words) {
    auto it = std::find(tokens.begin() + static_cast<std::ptrdiff_t>(from), tokens.end() - 1, w);
    if (it == tokens.end() - 1) return std::nullopt;
    const auto idx = static_cast<std::size_t>(it - tokens.begin());
    a.k.push_back(idx);
    from = idx + 1;
  }
  return a;
}

std::vector<MotionSegment> motion_segmentation(std::span<const SegmentInterval> word_segments,
                                               const WordAlignment& alignment) {
  if (word_segments.size() <= alignment.eos) {
    throw ArgumentError("need one word segment per token up to <eos>");
  }
  std::vector<MotionSegment> out;
  for (std::size_t m = 0; m < alignment.segment_count(); ++m) {
    std::vector<SegmentInterval> members;
    for (std::size_t i = alignment.segment_begin(m); i < alignment.segment_end(m); ++i) {
      if (!word_segments[i].empty()) members.push_back(word_segments[i]);
    }
    MotionSegment seg;
    if (members.empty()) {
      out.push_back(seg);
      continue;
    }
    std::sort(members.begin(), members.end(),
              [](const auto& a, const auto& b) { return a.start < b.start; });
    seg.interval = members.front();
    for (const auto& s : members) {
      if (s.start > seg.interval.end) seg.gap = true;
      seg.interval.end = std::max(seg.interval.end, s.end);
    }
    out.push_back(seg);
  }
  return out;
}

double iou(SegmentInterval p, SegmentInterval g) noexcept {
  const int u = union_size(p, g);
  return u == 0 ? 0.0 : static_cast<double>(overlap(p, g)) / u;
}

double iop(SegmentInterval p, SegmentInterval g) noexcept {
  return p.size() == 0 ? 0.0 : static_cast<double>(overlap(p, g)) / p.size();
}

double aggregate(std::span<const double> per_segment, std::optional<double> theta) {
  if (per_segment.empty()) throw ArgumentError("score over zero segments is undefined");
  double sum = 0.0;
  for (double v : per_segment) sum += theta ? (v >= *theta ? 1.0 : 0.0) : v;
  return sum / static_cast<double>(per_segment.size());
}

namespace {

template <class F>
std::optional<double> pairwise_score(std::span<const SegmentInterval> predicted,
                                     std::span<const SegmentInterval> truth, std::optional<double> theta, F f) {
  if (predicted.size() != truth.size()) return std::nullopt;
  std::vector<double> v(predicted.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(predicted[k], truth[k]);
  return aggregate(v, theta);
}

std::vector<SegmentInterval> intervals(const std::vector<MotionSegment>& segs) {
  std::vector<SegmentInterval> out;
  out.reserve(segs.size());
  for (const auto& s : segs) out.push_back(s.interval);
  return out;
}

}  // namespace

std::optional<double> iou_score(std::span<const SegmentInterval> predicted, std::span<const SegmentInterval> truth,
                                std::optional<double> theta) {
  return pairwise_score(predicted, truth, theta, iou);
}

std::optional<double> iop_score(std::span<const SegmentInterval> predicted, std::span<const SegmentInterval> truth,
                                std::optional<double> theta) {
  return pairwise_score(predicted, truth, theta, iop);
}

std::vector<double> element_of_per_segment(std::span<const double> positions, const WordAlignment& alignment,
                                           std::span<const SegmentInterval> truth) {
  if (positions.empty()) throw UnsupportedModeError("element-of needs alignment positions (local attention)");
  if (positions.size() <= alignment.eos) throw ArgumentError("need one position per token up to <eos>");
  if (truth.size() != alignment.segment_count()) throw ArgumentError("one ground-truth interval per segment");
  std::vector<double> out;
  for (std::size_t m = 0; m < alignment.segment_count(); ++m) {
    const auto b = alignment.segment_begin(m), e = alignment.segment_end(m);
    int hits = 0;
    for (std::size_t i = b; i < e; ++i) {
      const double r = std::floor(positions[i] + 0.5);
      if (r >= truth[m].start && r < truth[m].end) ++hits;
    }
    out.push_back(static_cast<double>(hits) / static_cast<double>(e - b));
  }
  return out;
}

double element_of_score(std::span<const double> positions, const WordAlignment& alignment,
                        std::span<const SegmentInterval> truth, std::optional<double> theta) {
  return aggregate(element_of_per_segment(positions, alignment, truth), theta);
}

std::optional<SampleSegmentation> segment_sample(const SegmentationInput& in) {
  if (in.tokens.empty() || in.tokens.back() != "<eos>") return std::nullopt;
  in.truth.validate();
  auto alignment = language_segmentation(in.tokens, in.truth.action_words);
  if (!alignment) return std::nullopt;
  SampleSegmentation s;
  s.id = in.id;
  s.result.alignment = *alignment;
  s.result.motion_segments = motion_segmentation(in.word_segments, *alignment);
  const auto pred = intervals(s.result.motion_segments);
  for (std::size_t k = 0; k < pred.size(); ++k) {
    s.iou.push_back(iou(pred[k], in.truth.segments[k]));
    s.iop.push_back(iop(pred[k], in.truth.segments[k]));
  }
  if (!in.positions.empty()) s.element_of = element_of_per_segment(in.positions, *alignment, in.truth.segments);
  return s;
}

std::vector<double> default_theta_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
  return g;
}

CorpusReport corpus_scores(std::span<const SampleSegmentation> samples, std::span<const double> thetas,
                           std::vector<std::string> excluded) {
  if (samples.empty()) throw ArgumentError("no alignable samples to score");
  CorpusReport r;
  r.thetas.assign(thetas.begin(), thetas.end());
  r.iou.assign(thetas.size(), 0.0);
  r.iop.assign(thetas.size(), 0.0);
  const bool has_element = std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.element_of.has_value(); });
  if (has_element) r.element_of.assign(thetas.size(), 0.0);
  double elem_cont = 0.0;
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      r.iou[i] += aggregate(s.iou, thetas[i]);
      r.iop[i] += aggregate(s.iop, thetas[i]);
      if (has_element) r.element_of[i] += aggregate(*s.element_of, thetas[i]);
    }
    r.iou_continuous += aggregate(s.iou, std::nullopt);
    r.iop_continuous += aggregate(s.iop, std::nullopt);
    if (has_element) elem_cont += aggregate(*s.element_of, std::nullopt);
  }
  const double n = static_cast<double>(samples.size());
  for (auto* v : {&r.iou, &r.iop, &r.element_of})
    for (double& x : *v) x /= n;
  r.iou_continuous /= n;
  r.iop_continuous /= n;
  if (has_element) r.element_of_continuous = elem_cont / n;
  r.scored = samples.size();
  r.excluded = std::move(excluded);
  r.samples.assign(samples.begin(), samples.end());
  return r;
}

CorpusReport corpus_scores(std::span<const SegmentationInput> inputs, std::span<const double> thetas) {
  std::vector<SampleSegmentation> scored;
  std::vector<std::string> excluded;
  for (const auto& in : inputs) {
    if (auto s = segment_sample(in)) scored.push_back(std::move(*s));
    else excluded.push_back(in.id);
  }
  return corpus_scores(scored, thetas, std::move(excluded));
}

}  // namespace m2t
