#include "hedmod/text.hpp"

#include <cctype>

namespace hedmod {

namespace {

bool detachable(char c) {
  switch (c) {
    case ',': case '.': case '(': case ')': case '[': case ']': case '"':
    case ':': case ';': case '!': case '?':
      return true;
    default:
      return false;
  }
}

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

Tokens tokenize(std::string_view text) {
  const std::string lowered = to_lower(text);
  Tokens out;
  std::size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && std::isspace(static_cast<unsigned char>(lowered[i]))) ++i;
    std::size_t j = i;
    while (j < lowered.size() && !std::isspace(static_cast<unsigned char>(lowered[j]))) ++j;
    if (j == i) break;
    std::size_t lo = i, hi = j;
    Tokens trailing;
    while (lo < hi && detachable(lowered[lo])) out.emplace_back(1, lowered[lo++]);
    while (hi > lo && detachable(lowered[hi - 1])) trailing.emplace_back(1, lowered[--hi]);
    if (hi > lo) out.emplace_back(lowered.substr(lo, hi - lo));
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
    i = j;
  }
  return out;
}

std::string join(const Tokens& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += !is_continuation(c);
  return n;
}

std::string_view utf8_prefix(std::string_view s, std::size_t n) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_continuation(static_cast<unsigned char>(s[i]))) {
      if (seen == n) return s.substr(0, i);
      ++seen;
    }
  }
  return s;
}

}  // namespace hedmod
