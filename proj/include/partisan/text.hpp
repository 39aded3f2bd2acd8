#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace partisan {

std::string_view trim(std::string_view s) noexcept;

// Unicode-aware helpers backed by the C.UTF-8 ctype tables. Invalid UTF-8
// bytes are treated as separators.
std::string to_lower_utf8(std::string_view s);
std::size_t count_letters(std::string_view s);

struct TokenizerOptions {
  bool lowercase = true;
};

// Tweet-oriented tokenizer. Whitespace-delimited chunks that look like URLs or
// @-mentions are dropped; the rest are split on any non-alphanumeric code point,
// so "#Masks4All" yields "masks4all".
std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& opts = {});

}  // namespace partisan
