#include "okwugbe/text.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "okwugbe/utf8.hpp"

namespace okwugbe::text {

namespace {

constexpr std::string_view kBlankToken = "<blank>";

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

bool is_ascii_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' || cp == U'\v';
}

}  // namespace

CharSet::CharSet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty() || symbols_[kBlankIndex] != kBlankToken) {
    throw std::runtime_error("charset must start with the <blank> symbol");
  }
  hash_ = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!index_.emplace(symbols_[i], i).second) {
      throw std::runtime_error("duplicate charset symbol: \"" + symbols_[i] + "\"");
    }
    hash_ = fnv1a(symbols_[i], hash_);
    hash_ = fnv1a(std::string_view("\n"), hash_);
  }
}

const std::string& CharSet::symbol(std::size_t index) const {
  if (index >= symbols_.size()) {
    throw std::out_of_range("charset index " + std::to_string(index) + " out of range [0, " +
                            std::to_string(symbols_.size()) + ")");
  }
  return symbols_[index];
}

bool CharSet::contains(std::string_view grapheme) const {
  return index_.find(std::string(grapheme)) != index_.end();
}

std::size_t CharSet::index_of(std::string_view grapheme) const {
  auto it = index_.find(std::string(grapheme));
  if (it == index_.end()) {
    throw std::runtime_error("grapheme \"" + std::string(grapheme) + "\" not in charset");
  }
  return it->second;
}

CharSet parse_charset(std::string_view content, const std::string& origin) {
  std::vector<std::string> symbols;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool blank_seen = false;
  while (pos <= content.size()) {
    std::size_t eol = content.find('\n', pos);
    std::string_view line = (eol == std::string_view::npos) ? content.substr(pos)
                                                            : content.substr(pos, eol - pos);
    pos = (eol == std::string_view::npos) ? content.size() + 1 : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') continue;
    if (!blank_seen) {
      if (line != kBlankToken) {
        throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                 ": first symbol line must be <blank>");
      }
      blank_seen = true;
      symbols.emplace_back(line);
      continue;
    }
    // Validate UTF-8 and the one-cluster-per-line contract; store composed.
    std::string composed = utf8::encode(utf8::compose(utf8::decode(line)));
    auto clusters = utf8::grapheme_clusters(composed);
    if (clusters.size() != 1) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": expected exactly one grapheme cluster, got " +
                               std::to_string(clusters.size()));
    }
    symbols.push_back(clusters[0]);
  }
  if (!blank_seen) {
    throw std::runtime_error(origin + ": charset file has no <blank> line");
  }
  return CharSet(std::move(symbols));
}

CharSet load_charset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open charset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_charset(buf.str(), path);
}

std::string normalize_text(std::string_view input) {
  std::vector<char32_t> cps = utf8::decode(input);
  for (auto& cp : cps) cp = utf8::to_lower(cp);
  cps = utf8::compose(cps);

  std::vector<char32_t> out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (char32_t cp : cps) {
    if (is_ascii_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(cp);
  }
  return utf8::encode(out);
}

LabelSequence encode(std::string_view normalized, const CharSet& cs) {
  LabelSequence seq;
  const auto clusters = utf8::grapheme_clusters(normalized);
  seq.ids.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (!cs.contains(clusters[i])) {
      throw std::runtime_error("grapheme \"" + clusters[i] + "\" at position " +
                               std::to_string(i) + " is not in the charset");
    }
    seq.ids.push_back(cs.index_of(clusters[i]));
  }
  return seq;
}

std::string decode_text(const LabelSequence& ids, const CharSet& cs) {
  std::string out;
  for (std::size_t id : ids.ids) out += cs.symbol(id);
  return out;
}

}  // namespace okwugbe::text
