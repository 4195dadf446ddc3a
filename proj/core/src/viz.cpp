#include "m2t/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "m2t/errors.hpp"

namespace m2t {

Tensor transparency(const Tensor& attention, double sharpness) {
  if (attention.rank() != 2 || attention.cols() == 0) throw DimensionError("transparency needs non-empty rows");
  Tensor v(attention.shape());
  for (std::size_t i = 0; i < attention.rows(); ++i) {
    auto a = attention.row(i);
    auto out = v.row(i);
    // G/max G = exp(F(α − max α)); the softmax normaliser cancels.
    const double m = *std::max_element(a.begin(), a.end());
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = std::exp(sharpness * (a[j] - m));
  }
  return v;
}

Tensor segment_coefficients(const Tensor& attention, const WordAlignment& alignment) {
  if (attention.rows() <= alignment.eos) throw DimensionError("attention has fewer rows than the sentence");
  const std::size_t frames = attention.cols();
  Tensor g({alignment.segment_count(), frames});
  for (std::size_t m = 0; m < alignment.segment_count(); ++m) {
    const auto b = alignment.segment_begin(m), e = alignment.segment_end(m);
    auto out = g.row(m);
    for (std::size_t i = b; i < e; ++i) {
      auto a = attention.row(i);
      for (std::size_t j = 0; j < frames; ++j) out[j] += a[j];
    }
    for (double& x : out) x /= static_cast<double>(e - b);
  }
  return g;
}

std::vector<std::size_t> row_argmax(const Tensor& m) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    out.push_back(static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin()));
  }
  return out;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_table(const std::filesystem::path& path, const std::string& corner,
                 const std::vector<std::string>& labels, const Tensor& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << corner;
  for (std::size_t j = 0; j < m.cols(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << csv_field(labels[i]);
    for (double v : m.row(i)) out << ',' << num(v);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cur += line[++i];
      else if (c == '"') quoted = false;
      else cur += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

ExportedFiles export_attention(const GenerationResult& result, const std::vector<std::string>& words,
                               const SegmentationResult* segmentation, const std::filesystem::path& out_dir,
                               double sharpness) {
  if (words.size() != result.tokens.size()) throw ArgumentError("one word per generated token");
  if (result.attention.rows() != words.size()) throw DimensionError("one attention row per generated token");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  ExportedFiles files{out_dir / "attention.csv", out_dir / "transparency.csv", out_dir / "trace.jsonl", {}};
  write_table(files.attention, "token", words, result.attention);
  write_table(files.transparency, "token", words, transparency(result.attention, sharpness));

  std::ofstream trace(files.trace, std::ios::binary);
  if (!trace) throw IoError("cannot open " + files.trace.string() + " for writing");
  const auto argmax = row_argmax(result.attention);
  for (std::size_t i = 0; i < words.size(); ++i) {
    // Built by hand so the position keeps %.17g formatting.
    trace << "{\"index\":" << i << ",\"token\":" << nlohmann::json(words[i]).dump() << ",\"position\":"
          << (result.positions.empty() ? std::string("null") : num(result.positions[i]))
          << ",\"start\":" << result.segments[i].start << ",\"end\":" << result.segments[i].end
          << ",\"argmax\":" << argmax[i] << "}\n";
  }
  if (!trace) throw IoError("failed writing " + files.trace.string());

  if (segmentation) {
    files.gamma = out_dir / "gamma.csv";
    const auto& a = segmentation->alignment;
    std::vector<std::string> labels;
    for (std::size_t m = 0; m < a.segment_count(); ++m) {
      labels.push_back(std::to_string(a.segment_begin(m)) + "-" + std::to_string(a.segment_end(m) - 1) + ":" +
                       words[a.segment_begin(m)]);
    }
    write_table(files.gamma, "segment", labels, segment_coefficients(result.attention, a));
  }
  return files;
}

namespace {

// std::stod rejects subnormals, which transparency rows legitimately contain.
double parse_number(const std::string& field, const std::filesystem::path& path) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size())
    throw FormatError(path.string() + ": not a number: '" + field + "'");
  return v;
}

}  // namespace

LabeledTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header");
  const std::size_t cols = split_csv(line).size() - 1;
  LabeledTable t;
  std::vector<double> values;
  while (std::getline(in, line)) {
    auto fields = split_csv(line);
    if (fields.size() != cols + 1) throw FormatError(path.string() + ": ragged row");
    t.row_labels.push_back(fields[0]);
    for (std::size_t j = 1; j < fields.size(); ++j) values.push_back(parse_number(fields[j], path));
  }
  t.values = Tensor({t.row_labels.size(), cols}, std::move(values));
  return t;
}

}  // namespace m2t
