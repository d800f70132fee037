#include "biv/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <stdexcept>

namespace biv {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Punctuation tolerated at token edges during grounding. The UTF-8 ellipsis
// is handled separately since it is multi-byte.
constexpr std::string_view kEdgePunct = ".,;:!?'\"`()";

void strip_token_edges(std::string& tok) {
  auto is_edge = [&](std::size_t pos) -> std::size_t {
    if (pos < tok.size() && kEdgePunct.find(tok[pos]) != std::string_view::npos) return 1;
    if (pos + 2 < tok.size() + 1 && tok.compare(pos, 3, "\xe2\x80\xa6") == 0) return 3;  // …
    return 0;
  };
  std::size_t begin = 0;
  while (begin < tok.size()) {
    std::size_t n = is_edge(begin);
    if (n == 0) break;
    begin += n;
  }
  std::size_t end = tok.size();
  while (end > begin) {
    bool trimmed = false;
    if (kEdgePunct.find(tok[end - 1]) != std::string_view::npos) {
      end -= 1;
      trimmed = true;
    } else if (end >= 3 && tok.compare(end - 3, 3, "\xe2\x80\xa6") == 0) {
      end -= 3;
      trimmed = true;
    }
    if (!trimmed) break;
  }
  tok = tok.substr(begin, end - begin);
}

}  // namespace

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> ground_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    strip_token_edges(cur);
    if (!cur.empty()) {
      std::transform(cur.begin(), cur.end(), cur.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      tokens.push_back(cur);
    }
    cur.clear();
  };
  for (char c : text) {
    if (is_space(c)) {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return tokens;
}

bool tokens_contain(const std::vector<std::string>& source, const std::vector<std::string>& quote) {
  if (quote.empty()) return false;
  if (quote.size() > source.size()) return false;
  return std::search(source.begin(), source.end(), quote.begin(), quote.end()) != source.end();
}

std::size_t find_grounded_span(std::string_view text, std::string_view quote) {
  std::vector<std::string> want = ground_tokens(quote);
  if (want.empty()) return std::string_view::npos;

  // Walk the raw text token by token, recording each token's byte offset.
  std::vector<std::string> have;
  std::vector<std::size_t> offsets;
  std::string cur;
  std::size_t cur_begin = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    bool boundary = i == text.size() || is_space(text[i]);
    if (!boundary) {
      if (cur.empty()) cur_begin = i;
      cur.push_back(text[i]);
      continue;
    }
    if (!cur.empty()) {
      std::string stripped = cur;
      strip_token_edges(stripped);
      if (!stripped.empty()) {
        std::transform(stripped.begin(), stripped.end(), stripped.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        have.push_back(stripped);
        offsets.push_back(cur_begin);
      }
      cur.clear();
    }
  }
  auto it = std::search(have.begin(), have.end(), want.begin(), want.end());
  if (it == have.end()) return std::string_view::npos;
  return offsets[static_cast<std::size_t>(it - have.begin())];
}

std::string_view sentence_around(std::string_view text, std::size_t begin, std::size_t end) {
  if (begin > text.size()) begin = text.size();
  if (end > text.size()) end = text.size();
  auto is_terminator = [](char c) { return c == '.' || c == '!' || c == '?' || c == '\n'; };
  std::size_t lo = begin;
  while (lo > 0 && !is_terminator(text[lo - 1])) --lo;
  std::size_t hi = end;
  while (hi < text.size() && !is_terminator(text[hi])) ++hi;
  if (hi < text.size()) ++hi;  // include the terminator
  return text.substr(lo, hi - lo);
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  std::string h = to_lower(haystack);
  std::string n = to_lower(needle);
  return h.find(n) != std::string::npos;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  if (offset > text.size()) offset = text.size();
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') {
      lines.emplace_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  lines.emplace_back(text.substr(start));
  return lines;
}

}  // namespace biv
