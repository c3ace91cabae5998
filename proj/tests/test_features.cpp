#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "varid/features.hpp"
#include "varid/rng.hpp"

using namespace varid;

namespace {

std::map<std::string, std::uint32_t> ngrams(std::string_view text, Analyzer a, int lo, int hi, bool lower = true) {
  const auto c = extract_ngrams(text, FeatureConfig{a, lo, hi, 100, lower});
  return {c.begin(), c.end()};
}

double norm(const SparseVector& v) {
  double s = 0;
  for (double x : v.values) s += x * x;
  return std::sqrt(s);
}

std::vector<std::string> random_texts(SplitMix64& rng, std::size_t n) {
  const std::vector<std::string> words = {"a", "casa", "Casa", "comboio", "trem", "e", "o", "é", "fato", "facto", ".",
                                          "viu-a", "d'água"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string t;
    const auto len = rng.below(12);
    for (std::size_t k = 0; k < len; ++k) t += (k ? " " : "") + words[rng.below(words.size())];
    out.push_back(t);
  }
  return out;
}

}  // namespace

TEST_CASE("tokenize_words examples") {
  CHECK(tokenize_words("Dá-me um computador.") == std::vector<std::string>{"Dá-me", "um", "computador", "."});
  CHECK(tokenize_words("").empty());
  CHECK(tokenize_words("a  b") == std::vector<std::string>{"a", "b"});
  CHECK(tokenize_words("d'água -x y- ...") ==
        std::vector<std::string>{"d'água", "-", "x", "y", "-", ".", ".", "."});
  CHECK(count_tokens("O João viu-a.") == 4);
  const auto spans = tokenize_spans("ab  cd");
  CHECK(spans == std::vector<TokenSpan>{{0, 2}, {4, 6}});
}

TEST_CASE("extract_ngrams examples") {
  CHECK(ngrams("ab", Analyzer::Char, 1, 2) == std::map<std::string, std::uint32_t>{{"a", 1}, {"b", 1}, {"ab", 1}});
  CHECK(ngrams("x y", Analyzer::Word, 1, 2) == std::map<std::string, std::uint32_t>{{"x", 1}, {"y", 1}, {"x y", 1}});
  CHECK(ngrams("AB", Analyzer::Char, 1, 1) == std::map<std::string, std::uint32_t>{{"a", 1}, {"b", 1}});
  CHECK(ngrams("AB", Analyzer::Char, 1, 1, false) == std::map<std::string, std::uint32_t>{{"A", 1}, {"B", 1}});
  CHECK(ngrams("é", Analyzer::Char, 1, 1) == std::map<std::string, std::uint32_t>{{"é", 1}});
  CHECK(ngrams("a b", Analyzer::Char, 3, 3) == std::map<std::string, std::uint32_t>{{"a b", 1}});
  CHECK(ngrams("ab", Analyzer::Char, 3, 4).empty());
}

TEST_CASE("char and word analyzers agree on single characters") {
  for (std::string s : {"a", "Z", "7", "ç", "."}) CHECK(ngrams(s, Analyzer::Char, 1, 1) == ngrams(s, Analyzer::Word, 1, 1));
}

TEST_CASE("feature config validation") {
  CHECK_THROWS_AS((FeatureConfig{Analyzer::Word, 0, 1, 10, true}.validate()), Error);
  CHECK_THROWS_AS((FeatureConfig{Analyzer::Word, 2, 1, 10, true}.validate()), Error);
  CHECK_THROWS_AS((FeatureConfig{Analyzer::Word, 1, 1, 0, true}.validate()), Error);
  CHECK(parse_analyzer("char") == Analyzer::Char);
}

TEST_CASE("idf formula") {
  CHECK(smoothed_idf(3, 3) == doctest::Approx(1.0));
  CHECK(smoothed_idf(3, 1) == doctest::Approx(1.6931).epsilon(1e-4));
  const std::vector<std::string> docs = {"a b", "a c", "a"};
  const auto space = fit_feature_space(std::span<const std::string>(docs), FeatureConfig{});
  CHECK(space.idf()[space.column("a")] == doctest::Approx(1.0));
  CHECK(space.idf()[space.column("b")] == doctest::Approx(std::log(2.0) + 1));
}

TEST_CASE("vocabulary keeps the most frequent n-grams") {
  const std::vector<std::string> docs = {"a a a a b b b b c c c d d e e f g h i j", "a"};
  const auto space = fit_feature_space(std::span<const std::string>(docs), FeatureConfig{Analyzer::Word, 1, 1, 5, true});
  CHECK(space.terms() == std::vector<std::string>{"a", "b", "c", "d", "e"});
  CHECK(space.dimension() == 5);
  for (std::size_t j = 0; j < space.dimension(); ++j) CHECK(space.column(space.terms()[j]) == static_cast<std::int64_t>(j));
  CHECK(space.column("zzz") == -1);
  CHECK_THROWS_AS(fit_feature_space(std::span<const std::string>{}, FeatureConfig{}), Error);
}

TEST_CASE("vectorize examples") {
  const std::vector<std::string> docs = {"a b", "c"};
  const auto space = fit_feature_space(std::span<const std::string>(docs), FeatureConfig{});
  CHECK(vectorize("zzz qqq", space).empty());
  const auto one = vectorize("c", space);
  REQUIRE(one.size() == 1);
  CHECK(one.values[0] == doctest::Approx(1.0));
  const auto two = vectorize("a b", space);
  REQUIRE(two.size() == 2);
  CHECK(two.values[0] == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(two.values[1] == doctest::Approx(1 / std::sqrt(2.0)));
}

TEST_CASE("vectors are unit length with increasing indices") {
  SplitMix64 rng(99);
  for (int round = 0; round < 40; ++round) {
    const auto texts = random_texts(rng, 20);
    const FeatureConfig cfg{rng.below(2) ? Analyzer::Word : Analyzer::Char, 1, 1 + static_cast<int>(rng.below(3)),
                            1 + rng.below(60), rng.below(2) == 0};
    bool any = false;
    for (const auto& t : texts) any |= !t.empty();
    if (!any) continue;
    const auto space = fit_feature_space(std::span<const std::string>(texts), cfg);
    CHECK(space.dimension() <= cfg.max_features);
    for (const auto& t : texts) {
      const auto v = vectorize(t, space);
      for (std::size_t k = 1; k < v.indices.size(); ++k) CHECK(v.indices[k - 1] < v.indices[k]);
      for (double x : v.values) CHECK(x > 0);
      if (!v.empty()) CHECK(std::abs(norm(v) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("df recomputed from vectorized presence equals stored df") {
  SplitMix64 rng(7);
  for (int round = 0; round < 20; ++round) {
    auto texts = random_texts(rng, 30);
    texts.push_back("casa");
    const FeatureConfig cfg{round % 2 ? Analyzer::Char : Analyzer::Word, 1, 2, 40, round % 3 != 0};
    const auto space = fit_feature_space(std::span<const std::string>(texts), cfg);
    std::vector<std::uint64_t> df(space.dimension(), 0);
    for (const auto& t : texts)
      for (auto j : vectorize(t, space).indices) ++df[j];
    CHECK(df == space.df());
    CHECK(space.fitted_docs() == texts.size());
  }
}
