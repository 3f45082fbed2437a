#include "okwugbe/utf8.hpp"

#include <array>
#include <stdexcept>

namespace okwugbe::utf8 {

namespace {

[[noreturn]] void bad_byte(std::size_t pos) {
  throw std::runtime_error("invalid UTF-8 byte sequence at offset " + std::to_string(pos));
}

}  // namespace

std::vector<char32_t> decode(std::string_view text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      bad_byte(i);
    }
    if (i + len > text.size()) bad_byte(i);
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) bad_byte(i + k);
      cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong encodings, surrogates, and out-of-range values.
    static constexpr std::array<char32_t, 5> kMin = {0, 0, 0x80, 0x800, 0x10000};
    if (len > 1 && cp < kMin[len]) bad_byte(i);
    if (cp >= 0xD800 && cp <= 0xDFFF) bad_byte(i);
    if (cp > 0x10FFFF) bad_byte(i);
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_one(char32_t cp) {
  std::string out;
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
  return out;
}

std::string encode(const std::vector<char32_t>& codepoints) {
  std::string out;
  for (char32_t cp : codepoints) out += encode_one(cp);
  return out;
}

bool is_combining_mark(char32_t cp) {
  return (cp >= 0x0300 && cp <= 0x036F) ||  // combining diacritical marks
         (cp >= 0x1AB0 && cp <= 0x1AFF) ||  // extended
         (cp >= 0x1DC0 && cp <= 0x1DFF) ||  // supplement
         (cp >= 0x20D0 && cp <= 0x20FF);    // marks for symbols
}

std::vector<std::string> grapheme_clusters(std::string_view text) {
  const std::vector<char32_t> cps = decode(text);
  std::vector<std::string> clusters;
  std::size_t i = 0;
  while (i < cps.size()) {
    std::vector<char32_t> cluster{cps[i]};
    ++i;
    while (i < cps.size() && is_combining_mark(cps[i])) {
      cluster.push_back(cps[i]);
      ++i;
    }
    clusters.push_back(encode(cluster));
  }
  return clusters;
}

char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  // Latin-1 supplement capitals (À..Þ except ×).
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;
  // Latin Extended-A: even/odd pairs (Ā..ž).
  if (cp >= 0x0100 && cp <= 0x017F) {
    if (cp == 0x0178) return 0x00FF;  // Ÿ
    if ((cp & 1) == 0) return cp + 1;
    return cp;
  }
  switch (cp) {
    case 0x0186: return 0x0254;  // Ɔ
    case 0x0190: return 0x025B;  // Ɛ
    case 0x0189: return 0x0256;  // Ɖ
    case 0x014A: return 0x014B;  // Ŋ
    case 0x0181: return 0x0253;  // Ɓ
    default: return cp;
  }
}

namespace {

struct Composition {
  char32_t base;
  char32_t mark;
  char32_t composed;
};

// Canonical (base, combining mark) -> precomposed pairs for the lowercase
// Latin letters appearing in the shipped alphabets.
constexpr Composition kCompositions[] = {
    {U'a', 0x0300, 0x00E0}, {U'a', 0x0301, 0x00E1}, {U'a', 0x0302, 0x00E2},
    {U'a', 0x0303, 0x00E3}, {U'a', 0x0308, 0x00E4}, {U'a', 0x0304, 0x0101},
    {U'a', 0x0306, 0x0103},
    {U'e', 0x0300, 0x00E8}, {U'e', 0x0301, 0x00E9}, {U'e', 0x0302, 0x00EA},
    {U'e', 0x0308, 0x00EB}, {U'e', 0x0304, 0x0113}, {U'e', 0x0306, 0x0115},
    {U'e', 0x0303, 0x1EBD},
    {U'i', 0x0300, 0x00EC}, {U'i', 0x0301, 0x00ED}, {U'i', 0x0302, 0x00EE},
    {U'i', 0x0308, 0x00EF}, {U'i', 0x0304, 0x012B}, {U'i', 0x0306, 0x012D},
    {U'i', 0x0303, 0x0129},
    {U'o', 0x0300, 0x00F2}, {U'o', 0x0301, 0x00F3}, {U'o', 0x0302, 0x00F4},
    {U'o', 0x0303, 0x00F5}, {U'o', 0x0308, 0x00F6}, {U'o', 0x0304, 0x014D},
    {U'o', 0x0306, 0x014F},
    {U'u', 0x0300, 0x00F9}, {U'u', 0x0301, 0x00FA}, {U'u', 0x0302, 0x00FB},
    {U'u', 0x0308, 0x00FC}, {U'u', 0x0304, 0x016B}, {U'u', 0x0306, 0x016D},
    {U'u', 0x0303, 0x0169},
    {U'n', 0x0303, 0x00F1}, {U'n', 0x0300, 0x01F9},
    {U'y', 0x0301, 0x00FD}, {U'y', 0x0308, 0x00FF}, {U'y', 0x0303, 0x1EF9},
};

}  // namespace

std::vector<char32_t> compose(const std::vector<char32_t>& codepoints) {
  std::vector<char32_t> out;
  out.reserve(codepoints.size());
  std::size_t i = 0;
  while (i < codepoints.size()) {
    if (i + 1 < codepoints.size() && is_combining_mark(codepoints[i + 1])) {
      bool matched = false;
      for (const auto& c : kCompositions) {
        if (c.base == codepoints[i] && c.mark == codepoints[i + 1]) {
          out.push_back(c.composed);
          i += 2;
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    out.push_back(codepoints[i]);
    ++i;
  }
  return out;
}

}  // namespace okwugbe::utf8
