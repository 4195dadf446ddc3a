#include "m2t/embedding.hpp"

#include <fstream>

#include <json.hpp>

#include "m2t/errors.hpp"
#include "m2t/text.hpp"

namespace m2t {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string canonical(std::string_view sentence) {
  auto words = tokenize(sentence);
  return join(words);
}

}  // namespace

HashedBagOfWords::HashedBagOfWords(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw ArgumentError("embedding dimension must be positive");
}

std::vector<double> HashedBagOfWords::embed(std::string_view sentence) const {
  std::vector<double> v(dimension_, 0.0);
  for (const auto& w : tokenize(sentence)) v[fnv1a(w) % dimension_] += 1.0;
  return v;
}

FileEmbeddingProvider::FileEmbeddingProvider(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding table " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto rec = nlohmann::json::parse(line);
      auto vec = rec.at("vector").get<std::vector<double>>();
      if (dimension_ == 0) dimension_ = vec.size();
      if (vec.empty() || vec.size() != dimension_) throw FormatError("vector width differs from the first record");
      table_[canonical(rec.at("sentence").get<std::string>())] = std::move(vec);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (table_.empty()) throw FormatError("embedding table " + path.string() + " is empty");
}

std::vector<double> FileEmbeddingProvider::embed(std::string_view sentence) const {
  auto it = table_.find(canonical(sentence));
  if (it == table_.end()) throw ArgumentError("no embedding for sentence \"" + std::string(sentence) + "\"");
  return it->second;
}

}  // namespace m2t
