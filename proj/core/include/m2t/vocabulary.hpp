#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "m2t/model.hpp"

namespace m2t {

/// Word ↔ id bijection. Ids 0–3 are <pad>, <sos>, <eos>, <unk>.
class Vocabulary {
 public:
  Vocabulary();

  /// Words seen at least `min_freq` times get ids ordered by descending
  /// frequency, then lexicographically.
  static Vocabulary build(std::span<const std::vector<std::string>> sentences, std::size_t min_freq);
  /// Rebuild from an id-ordered word list whose first four entries are the
  /// reserved tokens.
  static Vocabulary from_words(std::vector<std::string> words);

  std::size_t size() const noexcept { return words_.size(); }
  bool contains(std::string_view word) const;
  /// <unk> for unknown words.
  TokenId id(std::string_view word) const;
  const std::string& word(TokenId id) const;
  const std::vector<std::string>& words() const noexcept { return words_; }
  std::size_t frequency(std::string_view word) const;

  /// Word ids followed by <eos>.
  std::vector<TokenId> encode(std::span<const std::string> words) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
  std::unordered_map<std::string, std::size_t> freq_;
};

inline constexpr std::string_view kPadWord = "<pad>";
inline constexpr std::string_view kSosWord = "<sos>";
inline constexpr std::string_view kEosWord = "<eos>";
inline constexpr std::string_view kUnkWord = "<unk>";

}  // namespace m2t
