#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "m2t/annotation.hpp"
#include "m2t/tensor.hpp"

namespace m2t {

inline constexpr std::size_t kPoseWidth = 63;

struct MotionSample {
  std::string id;
  double fps = 10.0;
  /// T_x × width pose coordinates.
  Tensor frames;
  std::vector<std::string> descriptions;
  std::optional<GroundTruthAnnotation> annotation;

  std::size_t length() const noexcept { return frames.rows(); }
  std::size_t width() const noexcept { return frames.cols(); }

  friend bool operator==(const MotionSample&, const MotionSample&) = default;
};

struct RecordError {
  std::size_t line = 0;
  std::string reason;
};

struct ParseOptions {
  /// Every record must declare and carry this many coordinates per frame.
  std::size_t width = kPoseWidth;
  /// Keep every `stride`-th frame; annotations are rescaled to match.
  std::size_t stride = 1;
};

struct DatasetParseResult {
  std::vector<MotionSample> samples;
  std::vector<RecordError> rejected;
};

/// One JSON object per line. Invalid records are skipped and reported with
/// their 1-based line number; a missing file throws IoError.
DatasetParseResult parse_dataset(const std::filesystem::path& path, const ParseOptions& options = {});
DatasetParseResult parse_dataset(std::istream& in, const ParseOptions& options = {});

/// Throws FormatError describing the first violated constraint.
void validate_sample(const MotionSample& sample, std::size_t width = kPoseWidth);

void write_dataset(const std::filesystem::path& path, std::span<const MotionSample> samples);
void write_dataset(std::ostream& out, std::span<const MotionSample> samples);

/// Ground-truth annotation files: one {id, segments: [{word, start, end}]}
/// object per line.
std::map<std::string, GroundTruthAnnotation> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path,
                       const std::map<std::string, GroundTruthAnnotation>& annotations);

struct DatasetSplit {
  std::vector<MotionSample> train;
  std::vector<MotionSample> val;
  std::vector<MotionSample> test;
  std::uint64_t seed = 0;
};

/// Seeded shuffle, then the first ⌊n·val⌋ go to val, the next ⌊n·test⌋ to
/// test and the rest to train.
DatasetSplit split_dataset(std::vector<MotionSample> samples, double val_fraction,
                           double test_fraction, std::uint64_t seed);

}  // namespace m2t
