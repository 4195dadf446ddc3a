#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "m2t/pipeline.hpp"

namespace m2t::cli {

/// Process exit codes, one per error category.
enum ExitCode : int {
  kOk = 0,
  kRuntime = 1,
  kUsage = 2,
  kIo = 3,
  kVersion = 4,
  kFormat = 5,
  kConfig = 6,
};

/// Runs one subcommand. `args` excludes the program name. Diagnostics go to
/// `err`, human-readable results to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args);

/// predictions.jsonl: one generation per line, with everything the
/// segmentation and export subcommands need.
void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

}  // namespace m2t::cli
