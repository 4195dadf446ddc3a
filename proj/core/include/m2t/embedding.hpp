#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace m2t {

/// Sentence → fixed-width vector. Implementations must be deterministic.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  /// Throws when the sentence cannot be embedded.
  virtual std::vector<double> embed(std::string_view sentence) const = 0;
};

/// Counts of hashed tokens. Sentences sharing no token are orthogonal unless
/// two of their tokens collide in the hash.
class HashedBagOfWords final : public EmbeddingProvider {
 public:
  explicit HashedBagOfWords(std::size_t dimension = 4096);
  std::size_t dimension() const override { return dimension_; }
  std::vector<double> embed(std::string_view sentence) const override;

 private:
  std::size_t dimension_;
};

/// Table of precomputed vectors, one JSON object {"sentence", "vector"} per
/// line. Lookups use the tokenized form of the sentence so punctuation and
/// case do not matter.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(const std::filesystem::path& path);
  std::size_t dimension() const override { return dimension_; }
  std::vector<double> embed(std::string_view sentence) const override;
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::vector<double>> table_;
};

}  // namespace m2t
