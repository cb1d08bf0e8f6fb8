#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vidagents {

namespace detail {

// Decodes one UTF-8 code point starting at text[i]; advances i. Malformed
// bytes decode as themselves so tokenization never fails.
inline char32_t next_code_point(std::string_view text, std::size_t& i) {
  const auto lead = static_cast<unsigned char>(text[i]);
  std::size_t extra = 0;
  char32_t cp = lead;
  if (lead >= 0xF0 && lead < 0xF8) {
    extra = 3;
    cp = lead & 0x07;
  } else if (lead >= 0xE0 && lead < 0xF0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if (lead >= 0xC0 && lead < 0xE0) {
    extra = 1;
    cp = lead & 0x1F;
  }
  if (extra == 0 || i + extra >= text.size()) {
    ++i;
    return lead;
  }
  for (std::size_t k = 1; k <= extra; ++k) {
    const auto cont = static_cast<unsigned char>(text[i + k]);
    if ((cont & 0xC0) != 0x80) {
      ++i;
      return lead;
    }
    cp = (cp << 6) | (cont & 0x3F);
  }
  i += extra + 1;
  return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Letters and digits: ASCII alphanumerics, Latin-1 letters, and every code
// point above the Latin-1 block except general punctuation.
inline bool is_word_code_point(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
           (cp >= 'A' && cp <= 'Z');
  }
  if (cp < 0xC0) return false;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x206F) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  return true;
}

inline char32_t fold_case(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;  // Greek
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;                  // Cyrillic
  return cp;
}

}  // namespace detail

/// Lowercases ASCII, Latin-1, Greek and basic Cyrillic letters.
inline std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    detail::append_utf8(out, detail::fold_case(detail::next_code_point(text, i)));
  }
  return out;
}

/// Splits on non-alphanumeric code points, lowercases, and drops tokens
/// shorter than `min_length` code points.
inline std::vector<std::string> tokenize(std::string_view text,
                                         std::size_t min_length = 2) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t length = 0;
  auto flush = [&] {
    if (length >= min_length) tokens.push_back(current);
    current.clear();
    length = 0;
  };
  for (std::size_t i = 0; i < text.size();) {
    const char32_t cp = detail::next_code_point(text, i);
    if (detail::is_word_code_point(cp)) {
      detail::append_utf8(current, detail::fold_case(cp));
      ++length;
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

inline void add_terms(std::map<std::string, int>& bag, std::string_view text) {
  for (auto& token : tokenize(text)) ++bag[token];
}

}  // namespace vidagents
