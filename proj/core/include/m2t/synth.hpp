#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "m2t/dataset.hpp"

namespace m2t {

enum class Primitive { walk_forward, walk_backward, turn, wave, kick, stomp, squat };

inline constexpr Primitive kAllPrimitives[] = {Primitive::walk_forward, Primitive::walk_backward,
                                               Primitive::turn,         Primitive::wave,
                                               Primitive::kick,         Primitive::stomp,
                                               Primitive::squat};

/// "walk-forward", "walk-backward", "turn", ...
std::string to_string(Primitive p);
/// Accepts '-' or '_' separators; throws ConfigError otherwise.
Primitive parse_primitive(std::string_view name);
/// The verb that opens the primitive's phrase, used as its action word.
std::string action_word(Primitive p);
std::string phrase(Primitive p);

enum class Speed { slow, normal, fast };

struct PrimitiveSpec {
  Primitive kind;
  Speed speed = Speed::normal;
  /// Frames; drawn from the primitive's range when unset.
  std::optional<int> duration;
};

struct ScenarioConfig {
  std::size_t count = 100;
  std::size_t min_primitives = 2;
  std::size_t max_primitives = 3;
  /// Primitives drawn uniformly from here; adjacent draws never repeat.
  std::vector<Primitive> library{std::begin(kAllPrimitives), std::end(kAllPrimitives)};
  /// When non-empty every sample uses exactly this sequence.
  std::vector<Primitive> sequence;
  double noise = 0.01;
  double fps = 10.0;
  std::string id_prefix = "synth";

  void validate() const;
};

/// Frame ranges [lo, hi] at normal speed.
std::pair<int, int> duration_range(Primitive p);

/// Samples with annotations recording each primitive's exact frame interval.
/// Identical (config, seed) pairs give identical output.
std::vector<MotionSample> synth_generate(const ScenarioConfig& config, std::uint64_t seed);

/// One sample for a fixed primitive sequence.
MotionSample synth_sample(std::span<const PrimitiveSpec> sequence, const ScenarioConfig& config,
                          std::mt19937_64& rng, std::string id);

/// Names of the 21 joints in coordinate order; joint j occupies columns
/// 3j, 3j+1, 3j+2 as x, y, z with y up.
std::span<const std::string_view> joint_names();

}  // namespace m2t
