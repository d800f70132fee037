#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace biv {

// Lowercases ASCII, trims outer whitespace, collapses internal whitespace
// runs (including newlines) to single spaces.
std::string normalize_text(std::string_view text);

// Word tokens of the normalized text with punctuation in [.,;:!?'"`()…]
// stripped from token edges. Tokens that become empty are dropped; interior
// punctuation is kept so tokens are never split or merged.
std::vector<std::string> ground_tokens(std::string_view text);

// True when `quote`'s token sequence appears contiguously in `source`'s.
bool tokens_contain(const std::vector<std::string>& source, const std::vector<std::string>& quote);

// Byte offset in `text` where the token subsequence of `quote` begins, or
// npos. Offsets refer to the original (un-normalized) text.
std::size_t find_grounded_span(std::string_view text, std::string_view quote);

// The sentence window around [begin, end) in `text`, expanded to the nearest
// sentence terminators (. ! ? or newline).
std::string_view sentence_around(std::string_view text, std::size_t begin, std::size_t end);

std::string to_lower(std::string_view text);
bool contains_ci(std::string_view haystack, std::string_view needle);

std::string sha256_hex(std::string_view data);

// 1-based line number of byte `offset` within `text`.
std::size_t line_of_offset(std::string_view text, std::size_t offset);

std::vector<std::string> split_lines(std::string_view text);

}  // namespace biv
