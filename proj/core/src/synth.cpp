#include "m2t/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "m2t/errors.hpp"

namespace m2t {
namespace {

enum Joint {
  pelvis, spine, chest, neck, head,
  l_shoulder, l_elbow, l_wrist, r_shoulder, r_elbow, r_wrist,
  l_hip, l_knee, l_ankle, l_toe, r_hip, r_knee, r_ankle, r_toe,
  l_hand, r_hand,
  kJoints
};

constexpr std::array<std::string_view, kJoints> kJointNames = {
    "pelvis", "spine", "chest", "neck", "head",
    "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist",
    "l_hip", "l_knee", "l_ankle", "l_toe", "r_hip", "r_knee", "r_ankle", "r_toe",
    "l_hand", "r_hand"};

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

using Pose = std::array<Vec3, kJoints>;

// Body frame: x to the left, y up, z forward; feet on y = 0.
constexpr Pose kRest = {{
    {0.00, 1.00, 0.00}, {0.00, 1.20, 0.00}, {0.00, 1.40, 0.00}, {0.00, 1.55, 0.00}, {0.00, 1.70, 0.00},
    {0.20, 1.45, 0.00}, {0.25, 1.20, 0.00}, {0.27, 0.95, 0.00},
    {-0.20, 1.45, 0.00}, {-0.25, 1.20, 0.00}, {-0.27, 0.95, 0.00},
    {0.10, 0.95, 0.00}, {0.10, 0.50, 0.00}, {0.10, 0.08, 0.00}, {0.10, 0.02, 0.14},
    {-0.10, 0.95, 0.00}, {-0.10, 0.50, 0.00}, {-0.10, 0.08, 0.00}, {-0.10, 0.02, 0.14},
    {0.28, 0.85, 0.02}, {-0.28, 0.85, 0.02},
}};

void shift(Pose& p, std::span<const Joint> joints, Vec3 d) {
  for (Joint j : joints) {
    p[j].x += d.x;
    p[j].y += d.y;
    p[j].z += d.z;
  }
}

void shift(Pose& p, std::initializer_list<Joint> joints, Vec3 d) {
  shift(p, std::span<const Joint>(joints.begin(), joints.size()), d);
}

constexpr std::array<Joint, 12> kUpperBody = {spine, chest, neck, head, l_shoulder, l_elbow, l_wrist,
                                              r_shoulder, r_elbow, r_wrist, l_hand, r_hand};

double speed_factor(Speed s) {
  switch (s) {
    case Speed::slow: return 0.8;
    case Speed::fast: return 1.25;
    default: return 1.0;
  }
}

struct Body {
  double x = 0, z = 0, heading = 0;
};

// Leg swing for a gait cycle; `lift` scales foot clearance.
void gait(Pose& p, double phase, double stride, double lift) {
  const double s = std::sin(phase);
  const double up_l = std::max(0.0, s) * lift;
  const double up_r = std::max(0.0, -s) * lift;
  shift(p, {l_knee}, {0, up_l * 0.6, stride * s * 0.5});
  shift(p, {l_ankle, l_toe}, {0, up_l, stride * s});
  shift(p, {r_knee}, {0, up_r * 0.6, -stride * s * 0.5});
  shift(p, {r_ankle, r_toe}, {0, up_r, -stride * s});
}

// Posture of primitive `kind` at progress u ∈ [0,1); also advances the root.
void pose_primitive(Pose& p, Body& body, Primitive kind, double u, int frames, double speed) {
  constexpr double pi = std::numbers::pi;
  const double cycles = std::max(1.0, std::round(frames * speed / 10.0));
  const double phase = 2 * pi * cycles * u;
  switch (kind) {
    case Primitive::walk_forward: {
      gait(p, phase, 0.22, 0.10);
      shift(p, {chest, neck, head}, {0, 0, 0.06});
      const double s = std::sin(phase);
      shift(p, {l_wrist, l_hand}, {0, 0, -0.15 * s});
      shift(p, {r_wrist, r_hand}, {0, 0, 0.15 * s});
      const double step = 0.07 * speed;
      body.x += step * std::sin(body.heading);
      body.z += step * std::cos(body.heading);
      break;
    }
    case Primitive::walk_backward: {
      gait(p, phase, 0.16, 0.06);
      shift(p, {chest, neck, head}, {0, -0.03, -0.07});
      shift(p, {l_elbow, r_elbow}, {0, 0.12, 0.10});
      shift(p, {l_wrist, r_wrist, l_hand, r_hand}, {0, 0.22, 0.22});
      const double step = 0.05 * speed;
      body.x -= step * std::sin(body.heading);
      body.z -= step * std::cos(body.heading);
      break;
    }
    case Primitive::turn: {
      gait(p, phase, 0.03, 0.05);
      shift(p, {l_elbow}, {0.15, 0.15, 0});
      shift(p, {r_elbow}, {-0.15, 0.15, 0});
      shift(p, {l_wrist, l_hand}, {0.35, 0.40, 0});
      shift(p, {r_wrist, r_hand}, {-0.35, 0.40, 0});
      // Half a turn over the primitive with eased angular speed.
      body.heading += pi * (1 - std::cos(2 * pi * u)) / frames;
      break;
    }
    case Primitive::wave: {
      const double sway = 0.12 * std::sin(2 * pi * 2 * speed * cycles * u);
      p[r_elbow] = {-0.38, 1.55, 0.05};
      p[r_wrist] = {-0.38 + sway, 1.85, 0.05};
      p[r_hand] = {-0.38 + 1.3 * sway, 1.95, 0.05};
      shift(p, {head}, {-0.02, 0, 0});
      break;
    }
    case Primitive::kick: {
      const double a = std::pow(std::sin(pi * u), 2);
      shift(p, {r_knee}, {0, 0.20 * a, 0.30 * a});
      shift(p, {r_ankle}, {0, 0.40 * a, 0.65 * a});
      shift(p, {r_toe}, {0, 0.45 * a, 0.72 * a});
      shift(p, {chest, neck, head}, {0, 0, -0.08 * a});
      shift(p, {l_wrist, l_hand}, {0.12, 0.10, 0});
      shift(p, {r_wrist, r_hand}, {-0.12, 0.10, 0});
      break;
    }
    case Primitive::stomp: {
      const double lift = std::pow(std::max(0.0, std::sin(phase)), 0.7);
      shift(p, {l_knee}, {0, 0.25 * lift, 0.18 * lift});
      shift(p, {l_ankle, l_toe}, {0, 0.32 * lift, 0.10 * lift});
      shift(p, kUpperBody, {0, -0.04, 0});
      shift(p, {l_wrist, r_wrist, l_hand, r_hand}, {0, 0, -0.10});
      break;
    }
    case Primitive::squat: {
      const double d = 0.38 * std::pow(std::sin(pi * u), 2) + 0.05;
      shift(p, {pelvis, l_hip, r_hip}, {0, -d, -0.10 * d});
      shift(p, kUpperBody, {0, -d, 0});
      shift(p, {l_knee, r_knee}, {0, -0.4 * d, 0.45 * d});
      shift(p, {l_wrist, r_wrist, l_hand, r_hand}, {0, 0.35 * d, 0.55 * d});
      break;
    }
  }
}

void idle_pose(Pose& p, double t) {
  shift(p, {chest, neck, head, l_shoulder, r_shoulder}, {0, 0.01 * std::sin(0.7 * t), 0});
}

void write_frame(std::span<double> row, const Pose& p, const Body& body, double noise,
                 std::mt19937_64& rng) {
  std::normal_distribution<double> eps(0.0, 1.0);
  const double c = std::cos(body.heading), s = std::sin(body.heading);
  for (int j = 0; j < kJoints; ++j) {
    // Rotate the body frame about y, then translate to the root position.
    const double x = c * p[j].x + s * p[j].z + body.x;
    const double z = -s * p[j].x + c * p[j].z + body.z;
    row[3 * j] = x + noise * eps(rng);
    row[3 * j + 1] = p[j].y + noise * eps(rng);
    row[3 * j + 2] = z + noise * eps(rng);
  }
}

template <class T>
T pick(std::mt19937_64& rng, std::span<const T> from) {
  return from[std::uniform_int_distribution<std::size_t>(0, from.size() - 1)(rng)];
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::string describe(std::span<const PrimitiveSpec> seq) {
  std::string out = "a person";
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i == 1) out += " then";
    if (i == 2) out += " and";
    out += " " + phrase(seq[i].kind);
  }
  return out;
}

}  // namespace

std::string to_string(Primitive p) {
  switch (p) {
    case Primitive::walk_forward: return "walk-forward";
    case Primitive::walk_backward: return "walk-backward";
    case Primitive::turn: return "turn";
    case Primitive::wave: return "wave";
    case Primitive::kick: return "kick";
    case Primitive::stomp: return "stomp";
    case Primitive::squat: return "squat";
  }
  return "?";
}

Primitive parse_primitive(std::string_view name) {
  std::string norm(name);
  for (auto& c : norm)
    if (c == '_') c = '-';
  for (Primitive p : kAllPrimitives)
    if (to_string(p) == norm) return p;
  throw ConfigError("unknown primitive '" + std::string(name) + "'");
}

std::string action_word(Primitive p) {
  switch (p) {
    case Primitive::walk_forward:
    case Primitive::walk_backward: return "walks";
    case Primitive::turn: return "turns";
    case Primitive::wave: return "waves";
    case Primitive::kick: return "kicks";
    case Primitive::stomp: return "stomps";
    case Primitive::squat: return "squats";
  }
  return "?";
}

std::string phrase(Primitive p) {
  switch (p) {
    case Primitive::walk_forward: return "walks forward";
    case Primitive::walk_backward: return "walks backward";
    case Primitive::turn: return "turns around";
    case Primitive::wave: return "waves a hand";
    case Primitive::kick: return "kicks forward";
    case Primitive::stomp: return "stomps the left foot";
    case Primitive::squat: return "squats down";
  }
  return "?";
}

std::pair<int, int> duration_range(Primitive p) {
  switch (p) {
    case Primitive::walk_forward:
    case Primitive::walk_backward: return {14, 24};
    case Primitive::turn: return {10, 16};
    case Primitive::wave: return {12, 20};
    case Primitive::kick: return {8, 14};
    case Primitive::stomp: return {10, 18};
    case Primitive::squat: return {10, 18};
  }
  return {10, 20};
}

std::span<const std::string_view> joint_names() { return kJointNames; }

void ScenarioConfig::validate() const {
  if (sequence.empty()) {
    if (min_primitives < 1 || max_primitives > 3 || min_primitives > max_primitives) {
      throw ConfigError("primitives per sample must satisfy 1 <= min <= max <= 3");
    }
    if (library.empty()) throw ConfigError("empty primitive library");
    if (max_primitives > 1 && library.size() < 2) {
      throw ConfigError("a library of one primitive cannot avoid adjacent repeats");
    }
  } else if (sequence.size() > 3) {
    throw ConfigError("at most 3 primitives per sample");
  }
  if (noise < 0) throw ConfigError("noise must be non-negative");
  if (!(fps > 0)) throw ConfigError("fps must be positive");
}

MotionSample synth_sample(std::span<const PrimitiveSpec> sequence, const ScenarioConfig& config,
                          std::mt19937_64& rng, std::string id) {
  if (sequence.empty()) throw ConfigError("empty primitive sequence");
  std::vector<int> durations;
  for (const auto& ps : sequence) {
    int n = 0;
    if (ps.duration) {
      n = *ps.duration;
      if (n < 2) throw ConfigError("primitive duration must be at least 2 frames");
    } else {
      auto [lo, hi] = duration_range(ps.kind);
      n = static_cast<int>(std::lround(uniform_int(rng, lo, hi) / speed_factor(ps.speed)));
    }
    durations.push_back(n);
  }
  const int lead = uniform_int(rng, 2, 4);
  std::vector<int> gaps;
  for (std::size_t i = 1; i < sequence.size(); ++i) gaps.push_back(uniform_int(rng, 0, 2));
  const int tail = uniform_int(rng, 2, 4);

  int total = lead + tail;
  for (int n : durations) total += n;
  for (int g : gaps) total += g;

  MotionSample s;
  s.id = std::move(id);
  s.fps = config.fps;
  s.frames = Tensor({static_cast<std::size_t>(total), static_cast<std::size_t>(kJoints) * 3});
  GroundTruthAnnotation ann;

  Body body;
  int t = 0;
  auto emit_idle = [&](int n) {
    for (int i = 0; i < n; ++i, ++t) {
      Pose p = kRest;
      idle_pose(p, t);
      write_frame(s.frames.row(t), p, body, config.noise, rng);
    }
  };
  emit_idle(lead);
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    if (k > 0) emit_idle(gaps[k - 1]);
    const int n = durations[k];
    ann.action_words.push_back(action_word(sequence[k].kind));
    ann.segments.push_back({t, t + n});
    for (int i = 0; i < n; ++i, ++t) {
      Pose p = kRest;
      pose_primitive(p, body, sequence[k].kind, static_cast<double>(i) / n, n, speed_factor(sequence[k].speed));
      write_frame(s.frames.row(t), p, body, config.noise, rng);
    }
  }
  emit_idle(tail);
  s.descriptions.push_back(describe(sequence));
  s.annotation = std::move(ann);
  return s;
}

std::vector<MotionSample> synth_generate(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  constexpr Speed kSpeeds[] = {Speed::slow, Speed::normal, Speed::fast};
  std::vector<MotionSample> out;
  out.reserve(config.count);
  const int width = std::max<int>(1, static_cast<int>(std::to_string(config.count).size()));
  for (std::size_t i = 0; i < config.count; ++i) {
    std::vector<PrimitiveSpec> seq;
    if (!config.sequence.empty()) {
      for (Primitive p : config.sequence) seq.push_back({p, pick<Speed>(rng, kSpeeds), std::nullopt});
    } else {
      const int n = uniform_int(rng, static_cast<int>(config.min_primitives), static_cast<int>(config.max_primitives));
      for (int k = 0; k < n; ++k) {
        Primitive p = pick<Primitive>(rng, config.library);
        while (!seq.empty() && p == seq.back().kind) p = pick<Primitive>(rng, config.library);
        seq.push_back({p, pick<Speed>(rng, kSpeeds), std::nullopt});
      }
    }
    std::string num = std::to_string(i);
    std::string id = config.id_prefix + "-" + std::string(width - static_cast<int>(num.size()), '0') + num;
    out.push_back(synth_sample(seq, config, rng, std::move(id)));
  }
  return out;
}

}  // namespace m2t
