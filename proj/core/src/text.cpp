#include "m2t/text.hpp"

#include <cctype>
#include <sstream>

namespace m2t {

std::vector<std::string> tokenize(std::string_view sentence) {
  std::string lowered;
  lowered.reserve(sentence.size());
  for (char c : sentence) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  while (!lowered.empty() &&
         (std::ispunct(static_cast<unsigned char>(lowered.back())) ||
          std::isspace(static_cast<unsigned char>(lowered.back())))) {
    lowered.pop_back();
  }
  std::vector<std::string> out;
  std::istringstream is(lowered);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::string join(std::span<const std::string> words, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

}  // namespace m2t
