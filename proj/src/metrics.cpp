#include "okwugbe/metrics.hpp"

#include <stdexcept>

#include "okwugbe/utf8.hpp"

namespace okwugbe::metrics {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < text.size() && text[i] != ' ' && text[i] != '\t') ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

namespace {

ErrorRateReport make_report(std::size_t distance, std::size_t ref_len, const char* unit) {
  ErrorRateReport r;
  r.distance = distance;
  r.reference_length = ref_len;
  if (ref_len == 0) {
    if (distance != 0) {
      throw std::runtime_error(std::string("error rate undefined: empty reference with non-empty "
                                           "hypothesis (") +
                               unit + " distance " + std::to_string(distance) + ")");
    }
    r.rate_percent = 0.0;
    return r;
  }
  r.rate_percent = 100.0 * static_cast<double>(distance) / static_cast<double>(ref_len);
  return r;
}

}  // namespace

std::size_t wer_distance(std::string_view reference, std::string_view hypothesis) {
  return levenshtein(split_words(reference), split_words(hypothesis));
}

std::size_t cer_distance(std::string_view reference, std::string_view hypothesis) {
  return levenshtein(utf8::grapheme_clusters(reference), utf8::grapheme_clusters(hypothesis));
}

ErrorRateReport wer(std::string_view reference, std::string_view hypothesis) {
  const auto ref_words = split_words(reference);
  const auto hyp_words = split_words(hypothesis);
  return make_report(levenshtein(ref_words, hyp_words), ref_words.size(), "word");
}

ErrorRateReport cer(std::string_view reference, std::string_view hypothesis) {
  const auto ref_chars = utf8::grapheme_clusters(reference);
  const auto hyp_chars = utf8::grapheme_clusters(hypothesis);
  return make_report(levenshtein(ref_chars, hyp_chars), ref_chars.size(), "grapheme");
}

void CorpusAccumulator::add(std::string_view reference, std::string_view hypothesis) {
  const auto ref_words = split_words(reference);
  const auto hyp_words = split_words(hypothesis);
  word_distance_ += levenshtein(ref_words, hyp_words);
  word_ref_len_ += ref_words.size();
  const auto ref_chars = utf8::grapheme_clusters(reference);
  const auto hyp_chars = utf8::grapheme_clusters(hypothesis);
  char_distance_ += levenshtein(ref_chars, hyp_chars);
  char_ref_len_ += ref_chars.size();
  ++utterances_;
}

ErrorRateReport CorpusAccumulator::word_report() const {
  return make_report(word_distance_, word_ref_len_, "word");
}

ErrorRateReport CorpusAccumulator::char_report() const {
  return make_report(char_distance_, char_ref_len_, "grapheme");
}

}  // namespace okwugbe::metrics
