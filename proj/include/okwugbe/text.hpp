#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace okwugbe::text {

// Ordered alphabet of grapheme clusters. Index 0 is always the CTC blank;
// real symbols occupy [1, size).
class CharSet {
 public:
  static constexpr std::size_t kBlankIndex = 0;

  explicit CharSet(std::vector<std::string> symbols);

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(std::size_t index) const;
  const std::vector<std::string>& symbols() const { return symbols_; }

  bool contains(std::string_view grapheme) const;
  std::size_t index_of(std::string_view grapheme) const;  // throws if absent

  // FNV-1a over the symbol list; ties checkpoints to the charset they were
  // trained with.
  std::uint64_t hash() const { return hash_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t hash_ = 0;
};

struct LabelSequence {
  std::vector<std::size_t> ids;

  bool operator==(const LabelSequence&) const = default;
};

// Charset file: UTF-8, one grapheme cluster per line, line 1 must be the
// literal token "<blank>"; '#' lines are comments, empty lines ignored.
CharSet load_charset(const std::string& path);
CharSet parse_charset(std::string_view content, const std::string& origin);

// Canonical composition, lowercasing, whitespace collapsing, trimming.
std::string normalize_text(std::string_view input);

// Both expect/produce normalized text over the charset's alphabet.
LabelSequence encode(std::string_view normalized, const CharSet& cs);
std::string decode_text(const LabelSequence& ids, const CharSet& cs);

}  // namespace okwugbe::text
