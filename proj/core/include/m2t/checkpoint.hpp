#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "m2t/model.hpp"
#include "m2t/training.hpp"
#include "m2t/vocabulary.hpp"

namespace m2t {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  Vocabulary vocabulary;
  std::optional<TrainingConfig> training;
  std::vector<double> loss_curve;
};

/// JSON document; doubles are written in shortest round-trip form, so a
/// reload reproduces every parameter bit for bit.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// IoError if unreadable, VersionError on a different format_version,
/// FormatError on anything else malformed.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Configs as JSON text, for manifests.
std::string to_json(const ModelConfig& config);
std::string to_json(const TrainingConfig& config);
ModelConfig model_config_from_json(const std::string& text);
TrainingConfig training_config_from_json(const std::string& text);

}  // namespace m2t
