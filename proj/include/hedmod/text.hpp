#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hedmod {

using Tokens = std::vector<std::string>;

/// Lowercases ASCII letters; other bytes are kept.
std::string to_lower(std::string_view text);

/// Lowercase, split on whitespace, then peel leading/trailing punctuation
/// (commas, periods, parentheses, brackets, quotes, colons, semicolons, !, ?)
/// into standalone tokens.
Tokens tokenize(std::string_view text);

std::string join(const Tokens& tokens, std::string_view sep = " ");

/// Number of UTF-8 code points.
std::size_t utf8_length(std::string_view s);
/// First `n` code points (or the whole string when shorter).
std::string_view utf8_prefix(std::string_view s, std::size_t n);

}  // namespace hedmod
