#include "m2t/vocabulary.hpp"

#include <algorithm>

#include "m2t/errors.hpp"

namespace m2t {

Vocabulary::Vocabulary() {
  for (auto w : {kPadWord, kSosWord, kEosWord, kUnkWord}) {
    ids_.emplace(std::string(w), static_cast<TokenId>(words_.size()));
    words_.emplace_back(w);
  }
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> sentences, std::size_t min_freq) {
  Vocabulary v;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& s : sentences)
    for (const auto& w : s) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [w, c] : counts) {
    if (c >= min_freq && !v.ids_.count(w)) kept.emplace_back(w, c);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  for (auto& [w, c] : kept) {
    v.ids_.emplace(w, static_cast<TokenId>(v.words_.size()));
    v.words_.push_back(w);
  }
  v.freq_ = std::move(counts);
  return v;
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  Vocabulary v;
  if (words.size() < special::count) throw FormatError("vocabulary is missing the reserved tokens");
  for (TokenId i = 0; i < special::count; ++i) {
    if (words[i] != v.words_[i]) throw FormatError("reserved token " + std::to_string(i) + " is '" + words[i] + "'");
  }
  for (std::size_t i = special::count; i < words.size(); ++i) {
    if (!v.ids_.emplace(words[i], static_cast<TokenId>(i)).second) {
      throw FormatError("duplicate vocabulary word '" + words[i] + "'");
    }
    v.words_.push_back(words[i]);
  }
  return v;
}

bool Vocabulary::contains(std::string_view word) const { return ids_.count(std::string(word)) != 0; }

TokenId Vocabulary::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? special::unk : it->second;
}

const std::string& Vocabulary::word(TokenId id) const {
  if (id >= words_.size()) throw ArgumentError("token id " + std::to_string(id) + " outside vocabulary");
  return words_[id];
}

std::size_t Vocabulary::frequency(std::string_view word) const {
  auto it = freq_.find(std::string(word));
  return it == freq_.end() ? 0 : it->second;
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> words) const {
  std::vector<TokenId> out;
  out.reserve(words.size() + 1);
  for (const auto& w : words) out.push_back(id(w));
  out.push_back(special::eos);
  return out;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId t : ids) out.push_back(word(t));
  return out;
}

}  // namespace m2t
