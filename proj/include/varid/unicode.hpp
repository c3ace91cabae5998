#pragma once

// Thin ICU-backed helpers over UTF-8 std::string text.

#include <string>
#include <string_view>
#include <vector>

namespace varid::unicode {

/// Calls fn(code_point, byte_begin, byte_end) for each code point.
/// Ill-formed sequences are reported as U+FFFD covering the bad bytes.
template <typename Fn>
void for_each_code_point(std::string_view text, Fn&& fn);

char32_t decode_at(std::string_view text, std::size_t& pos);
void append_utf8(std::string& out, char32_t cp);

bool is_letter(char32_t cp);
bool is_mark(char32_t cp);
bool is_number(char32_t cp);
bool is_space(char32_t cp);
bool is_control(char32_t cp);  // Cc or Cf
bool is_upper(char32_t cp);    // Lu or Lt
inline bool is_word_char(char32_t cp) { return is_letter(cp) || is_number(cp) || is_mark(cp); }

char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view text);

/// Unicode NFKD.
std::string nfkd(std::string_view text);
/// Unicode NFKC.
std::string nfkc(std::string_view text);

/// Byte offset of every code point, followed by text.size().
std::vector<std::size_t> code_point_offsets(std::string_view text);

std::size_t code_point_count(std::string_view text);

template <typename Fn>
void for_each_code_point(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t begin = pos;
    const char32_t cp = decode_at(text, pos);
    fn(cp, begin, pos);
  }
}

}  // namespace varid::unicode
