#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace okwugbe::utf8 {

// Decodes a UTF-8 string into Unicode code points.
// Throws std::runtime_error on malformed bytes (truncated sequences,
// overlong encodings, surrogates, values past U+10FFFF).
std::vector<char32_t> decode(std::string_view text);

std::string encode(const std::vector<char32_t>& codepoints);
std::string encode_one(char32_t cp);

// Combining marks attach to the preceding base character when splitting
// into grapheme clusters (U+0300..U+036F plus the supplement/extension
// blocks cover every diacritic in the shipped alphabets).
bool is_combining_mark(char32_t cp);

// One cluster = a base code point plus any trailing combining marks.
std::vector<std::string> grapheme_clusters(std::string_view text);

// Lowercases a code point: ASCII plus the accented Latin letters and the
// African-alphabet capitals (Ɔ, Ɛ, Ɖ, ...) used by the shipped charsets.
char32_t to_lower(char32_t cp);

// Canonical composition for base-letter + combining-mark pairs that have a
// precomposed Latin form (a/e/i/o/u/n/y with grave, acute, circumflex,
// tilde, diaeresis, macron, breve). Pairs without a precomposed form (the
// open vowels ɔ, ɛ with tone marks) are kept as-is; they still form a
// single grapheme cluster.
std::vector<char32_t> compose(const std::vector<char32_t>& codepoints);

}  // namespace okwugbe::utf8
