#include "m2t/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "m2t/errors.hpp"

namespace m2t {

using nlohmann::json;

void GroundTruthAnnotation::validate() const {
  if (action_words.size() != segments.size()) {
    throw FormatError("annotation has " + std::to_string(action_words.size()) + " words but " +
                      std::to_string(segments.size()) + " segments");
  }
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& s = segments[k];
    if (s.start < 0 || s.start >= s.end) {
      throw FormatError("annotation segment " + std::to_string(k) + " is degenerate");
    }
    if (k > 0 && s.start < segments[k - 1].end) {
      throw FormatError("annotation segment " + std::to_string(k) + " is unordered or overlaps its predecessor");
    }
    if (action_words[k].empty()) throw FormatError("annotation word " + std::to_string(k) + " is empty");
  }
}

void GroundTruthAnnotation::validate(int frames) const {
  validate();
  if (!segments.empty() && segments.back().end > frames) {
    throw FormatError("annotation ends at frame " + std::to_string(segments.back().end) + " past " +
                      std::to_string(frames) + " frames");
  }
}

namespace {

json annotation_to_json(const GroundTruthAnnotation& a) {
  json arr = json::array();
  for (std::size_t k = 0; k < a.segments.size(); ++k) {
    arr.push_back({{"word", a.action_words[k]}, {"start", a.segments[k].start}, {"end", a.segments[k].end}});
  }
  return arr;
}

GroundTruthAnnotation annotation_from_json(const json& arr) {
  if (!arr.is_array()) throw FormatError("annotation must be an array");
  GroundTruthAnnotation a;
  for (const auto& seg : arr) {
    a.action_words.push_back(seg.at("word").get<std::string>());
    a.segments.push_back({seg.at("start").get<int>(), seg.at("end").get<int>()});
  }
  return a;
}

MotionSample sample_from_json(const json& rec, const ParseOptions& opt) {
  MotionSample s;
  s.id = rec.at("id").get<std::string>();
  s.fps = rec.value("fps", 10.0);
  const auto width = rec.at("width").get<std::size_t>();
  if (width != opt.width) {
    throw FormatError("declared width " + std::to_string(width) + " != expected " + std::to_string(opt.width));
  }
  const auto& frames = rec.at("frames");
  if (!frames.is_array()) throw FormatError("frames must be an array of rows");
  const std::size_t stride = std::max<std::size_t>(opt.stride, 1);
  std::vector<double> values;
  std::size_t rows = 0;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& row = frames[t];
    if (!row.is_array() || row.size() != width) {
      throw FormatError("frame " + std::to_string(t) + " has width " +
                        std::to_string(row.is_array() ? row.size() : 0) + ", expected " + std::to_string(width));
    }
    if (t % stride != 0) continue;
    for (const auto& v : row) values.push_back(v.get<double>());
    ++rows;
  }
  s.frames = Tensor({rows, width}, std::move(values));
  for (const auto& d : rec.at("descriptions")) s.descriptions.push_back(d.get<std::string>());
  if (rec.contains("annotation") && !rec["annotation"].is_null()) {
    auto a = annotation_from_json(rec["annotation"]);
    if (stride > 1) {
      // Validate on the original timeline first so unordered input is caught
      // before rounding can mask it.
      a.validate(static_cast<int>(frames.size()));
      const int st = static_cast<int>(stride);
      for (auto& g : a.segments) {
        g.start = (g.start + st - 1) / st;
        g.end = (g.end + st - 1) / st;
      }
    }
    s.annotation = std::move(a);
  }
  validate_sample(s, opt.width);
  return s;
}

json sample_to_json(const MotionSample& s) {
  json frames = json::array();
  for (std::size_t t = 0; t < s.length(); ++t) {
    auto row = s.frames.row(t);
    frames.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json rec = {{"id", s.id}, {"fps", s.fps}, {"width", s.width()}, {"frames", std::move(frames)},
              {"descriptions", s.descriptions}};
  if (s.annotation) rec["annotation"] = annotation_to_json(*s.annotation);
  return rec;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

void validate_sample(const MotionSample& s, std::size_t width) {
  if (s.id.empty()) throw FormatError("empty id");
  if (s.frames.rank() != 2 || s.length() < 2) throw FormatError("a motion needs at least 2 frames");
  if (s.width() != width) {
    throw FormatError("frame width " + std::to_string(s.width()) + ", expected " + std::to_string(width));
  }
  if (!s.frames.all_finite()) throw FormatError("non-finite coordinate");
  if (!(s.fps > 0)) throw FormatError("fps must be positive");
  if (s.descriptions.empty()) throw FormatError("no descriptions");
  for (const auto& d : s.descriptions) {
    if (d.find_first_not_of(" \t") == std::string::npos) throw FormatError("empty description");
  }
  if (s.annotation) s.annotation->validate(static_cast<int>(s.length()));
}

DatasetParseResult parse_dataset(std::istream& in, const ParseOptions& options) {
  DatasetParseResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      result.samples.push_back(sample_from_json(json::parse(line), options));
    } catch (const json::exception& e) {
      result.rejected.push_back({lineno, e.what()});
    } catch (const FormatError& e) {
      result.rejected.push_back({lineno, e.what()});
    }
  }
  return result;
}

DatasetParseResult parse_dataset(const std::filesystem::path& path, const ParseOptions& options) {
  auto in = open_for_read(path);
  return parse_dataset(in, options);
}

void write_dataset(std::ostream& out, std::span<const MotionSample> samples) {
  for (const auto& s : samples) out << sample_to_json(s).dump() << '\n';
}

void write_dataset(const std::filesystem::path& path, std::span<const MotionSample> samples) {
  auto out = open_for_write(path);
  write_dataset(out, samples);
  if (!out) throw IoError("failed writing " + path.string());
}

std::map<std::string, GroundTruthAnnotation> read_annotations(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::map<std::string, GroundTruthAnnotation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto rec = json::parse(line);
      auto a = annotation_from_json(rec.at("segments"));
      a.validate();
      out[rec.at("id").get<std::string>()] = std::move(a);
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_annotations(const std::filesystem::path& path,
                       const std::map<std::string, GroundTruthAnnotation>& annotations) {
  auto out = open_for_write(path);
  for (const auto& [id, a] : annotations) {
    out << json{{"id", id}, {"segments", annotation_to_json(a)}}.dump() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

DatasetSplit split_dataset(std::vector<MotionSample> samples, double val_fraction, double test_fraction,
                           std::uint64_t seed) {
  if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction > 1) {
    throw ArgumentError("split fractions must be non-negative and sum to at most 1");
  }
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Fisher–Yates with an explicit draw so the permutation does not depend on
  // the standard library's shuffle implementation.
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
  const auto n = samples.size();
  const auto n_val = static_cast<std::size_t>(n * val_fraction);
  const auto n_test = static_cast<std::size_t>(n * test_fraction);
  DatasetSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = samples[order[i]];
    if (i < n_val) split.val.push_back(std::move(s));
    else if (i < n_val + n_test) split.test.push_back(std::move(s));
    else split.train.push_back(std::move(s));
  }
  return split;
}

}  // namespace m2t
