#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "okwugbe/metrics.hpp"

using namespace okwugbe::metrics;

namespace {

// Independent full-table Levenshtein oracle.
std::size_t lev_full_table(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[n][m];
}

std::vector<std::string> random_tokens(std::mt19937& rng, std::size_t max_len,
                                       std::size_t alphabet) {
  std::vector<std::string> out;
  const std::size_t n = rng() % (max_len + 1);
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(1, 'a' + rng() % alphabet));
  return out;
}

}  // namespace

TEST_CASE("levenshtein basics") {
  const std::vector<std::string> empty;
  const std::vector<std::string> abc = {"a", "b", "c"};
  CHECK(levenshtein(abc, abc) == 0);
  CHECK(levenshtein(empty, abc) == 3);
  const std::string kitten = "kitten", sitting = "sitting";
  CHECK(levenshtein(kitten, sitting) == lev_full_table({"k", "i", "t", "t", "e", "n"},
                                                       {"s", "i", "t", "t", "i", "n", "g"}));
  CHECK(levenshtein(kitten, sitting) == 3);
}

TEST_CASE("levenshtein equals full-table oracle on random pairs") {
  std::mt19937 rng(11);
  for (int it = 0; it < 300; ++it) {
    auto a = random_tokens(rng, 10, 4);
    auto b = random_tokens(rng, 10, 4);
    CHECK(levenshtein(a, b) == lev_full_table(a, b));
  }
}

TEST_CASE("levenshtein metric axioms") {
  std::mt19937 rng(23);
  for (int it = 0; it < 1000; ++it) {
    auto a = random_tokens(rng, 8, 3);
    auto b = random_tokens(rng, 8, 3);
    auto c = random_tokens(rng, 8, 3);
    const auto dab = levenshtein(a, b);
    const auto dba = levenshtein(b, a);
    CHECK(dab == dba);
    CHECK((dab == 0) == (a == b));
    CHECK(levenshtein(a, c) <= dab + levenshtein(b, c));
    // length bounds
    const std::size_t la = a.size(), lb = b.size();
    CHECK(dab >= (la > lb ? la - lb : lb - la));
    CHECK(dab <= std::max(la, lb));
  }
}

TEST_CASE("wer and cer on identical strings are zero") {
  const auto w = wer("eo mi sa akpan nu mi", "eo mi sa akpan nu mi");
  CHECK(w.distance == 0);
  CHECK(w.rate_percent == 0.0);
  const auto c = cer("abc", "abc");
  CHECK(c.distance == 0);
}

TEST_CASE("one substituted word out of six") {
  const auto w = wer("eo mi sa akpan nu mi", "eo mi sa aakpan nu mi");
  CHECK(w.distance == 1);
  CHECK(w.reference_length == 6);
  CHECK(w.rate_percent == doctest::Approx(100.0 / 6.0));
}

TEST_CASE("cer can reach 100 percent") {
  // 4-char reference, 1-char hypothesis sharing nothing: 3 deletions + 1 sub
  const auto c = cer("wxyz", "a");
  CHECK(c.distance == 4);
  CHECK(c.reference_length == 4);
  CHECK(c.rate_percent == doctest::Approx(100.0));
}

TEST_CASE("rate can exceed 100 percent") {
  const auto w = wer("a", "b c d");
  CHECK(w.rate_percent > 100.0);
}

TEST_CASE("empty reference with non-empty hypothesis is an error") {
  CHECK_THROWS(wer("", "a b"));
  CHECK(wer_distance("", "a b") == 2);  // distance still defined
}

TEST_CASE("cer counts a diacritic-bearing letter as one unit") {
  // open-o with acute differs from bare open-o by one substitution
  const auto c = cer("kpɔ́", "kpɔ");
  CHECK(c.distance == 1);
  CHECK(c.reference_length == 3);
}

TEST_CASE("corpus accumulator aggregates distances before dividing") {
  CorpusAccumulator acc;
  acc.add("a b", "a b");    // 0 of 2
  acc.add("a b c d", "x b c d");  // 1 of 4
  const auto w = acc.word_report();
  CHECK(w.distance == 1);
  CHECK(w.reference_length == 6);
  CHECK(w.rate_percent == doctest::Approx(100.0 / 6.0));
  CHECK(acc.utterances() == 2);
}
