#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace m2t {

/// Lowercases, strips terminal punctuation and splits on whitespace. The
/// same rule applies to references, predictions and training captions.
std::vector<std::string> tokenize(std::string_view sentence);

std::string join(std::span<const std::string> words, std::string_view sep = " ");

}  // namespace m2t
