#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "m2t/decoder.hpp"
#include "m2t/segmentation.hpp"

namespace m2t {

/// V = G / max_j G with G = softmax_j(F·α) per row; each row peaks at exactly 1.
Tensor transparency(const Tensor& attention, double sharpness = 100.0);

/// γ rows: mean of the α rows of each language segment, one row per segment.
Tensor segment_coefficients(const Tensor& attention, const WordAlignment& alignment);

/// Column of the first maximum in each row.
std::vector<std::size_t> row_argmax(const Tensor& m);

struct ExportedFiles {
  std::filesystem::path attention;
  std::filesystem::path transparency;
  std::filesystem::path trace;
  /// Only written when a segmentation is supplied.
  std::filesystem::path gamma;
};

/// Writes attention.csv, transparency.csv, trace.jsonl and, with a
/// segmentation, gamma.csv into `out_dir`. Numbers use %.17g so identical
/// inputs give identical bytes.
ExportedFiles export_attention(const GenerationResult& result, const std::vector<std::string>& words,
                               const SegmentationResult* segmentation, const std::filesystem::path& out_dir,
                               double sharpness = 100.0);

/// A table written by export_attention: row labels and the numeric body.
struct LabeledTable {
  std::vector<std::string> row_labels;
  Tensor values;
};

LabeledTable read_table(const std::filesystem::path& path);

}  // namespace m2t
