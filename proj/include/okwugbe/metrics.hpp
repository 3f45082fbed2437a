#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace okwugbe::metrics {

// Minimum insertions + deletions + substitutions (unit costs) turning a
// into b. Two-row dynamic program.
template <typename Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      const std::size_t del = prev[j] + 1;
      const std::size_t ins = cur[j - 1] + 1;
      cur[j] = std::min(sub, std::min(del, ins));
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

struct ErrorRateReport {
  std::size_t distance = 0;          // edit operations
  std::size_t reference_length = 0;  // words or graphemes in the reference
  double rate_percent = 0.0;         // 100 * distance / reference_length

  bool rate_defined() const { return reference_length > 0; }
};

std::vector<std::string> split_words(std::string_view text);

// Word-level and grapheme-level error rates. The rate is undefined (throws)
// for an empty reference with a non-empty hypothesis; use the *_distance
// variants when only the edit count is needed.
ErrorRateReport wer(std::string_view reference, std::string_view hypothesis);
ErrorRateReport cer(std::string_view reference, std::string_view hypothesis);

std::size_t wer_distance(std::string_view reference, std::string_view hypothesis);
std::size_t cer_distance(std::string_view reference, std::string_view hypothesis);

// Corpus rates aggregate distances before dividing.
class CorpusAccumulator {
 public:
  void add(std::string_view reference, std::string_view hypothesis);
  ErrorRateReport word_report() const;
  ErrorRateReport char_report() const;
  std::size_t utterances() const { return utterances_; }

 private:
  std::size_t word_distance_ = 0;
  std::size_t word_ref_len_ = 0;
  std::size_t char_distance_ = 0;
  std::size_t char_ref_len_ = 0;
  std::size_t utterances_ = 0;
};

}  // namespace okwugbe::metrics
