#include "varid/features.hpp"

#include <algorithm>
#include <cmath>

#include "varid/hash.hpp"
#include "varid/unicode.hpp"

namespace varid {

namespace {

bool is_joiner(char32_t cp) {
  return cp == U'-' || cp == U'\'' || cp == U'’' || cp == U'‐' || cp == U'‑';
}

}  // namespace

std::vector<TokenSpan> tokenize_spans(std::string_view text) {
  struct Cp {
    char32_t cp;
    std::size_t begin, end;
  };
  std::vector<Cp> cps;
  cps.reserve(text.size());
  unicode::for_each_code_point(text, [&](char32_t cp, std::size_t b, std::size_t e) { cps.push_back({cp, b, e}); });

  std::vector<TokenSpan> tokens;
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t cp = cps[i].cp;
    if (unicode::is_space(cp) || unicode::is_control(cp)) {
      ++i;
      continue;
    }
    if (!unicode::is_word_char(cp)) {
      tokens.push_back({cps[i].begin, cps[i].end});
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < cps.size()) {
      if (unicode::is_word_char(cps[j].cp)) {
        ++j;
      } else if (is_joiner(cps[j].cp) && j + 1 < cps.size() && unicode::is_word_char(cps[j + 1].cp)) {
        j += 2;
      } else {
        break;
      }
    }
    tokens.push_back({cps[i].begin, cps[j - 1].end});
    i = j;
  }
  return tokens;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& s : tokenize_spans(text)) out.emplace_back(text.substr(s.begin, s.end - s.begin));
  return out;
}

std::size_t count_tokens(std::string_view text) { return tokenize_spans(text).size(); }

std::string_view to_string(Analyzer a) { return a == Analyzer::Word ? "word" : "char"; }

std::optional<Analyzer> parse_analyzer(std::string_view s) {
  if (s == "word" || s == "Word") return Analyzer::Word;
  if (s == "char" || s == "Char") return Analyzer::Char;
  return std::nullopt;
}

void FeatureConfig::validate() const {
  if (ngram_lo < 1 || ngram_hi < ngram_lo)
    throw Error(ErrorKind::Usage, "invalid ngram range (" + std::to_string(ngram_lo) + "," +
                                      std::to_string(ngram_hi) + ")");
  if (max_features == 0) throw Error(ErrorKind::Usage, "max_features must be positive");
}

namespace {

template <typename Fn>
void visit_ngrams(std::string_view raw, const FeatureConfig& config, Fn&& fn) {
  std::string lowered;
  std::string_view text = raw;
  if (config.lowercase) {
    lowered = unicode::to_lower(raw);
    text = lowered;
  }
  const auto lo = static_cast<std::size_t>(config.ngram_lo);
  const auto hi = static_cast<std::size_t>(config.ngram_hi);

  if (config.analyzer == Analyzer::Char) {
    const auto offsets = unicode::code_point_offsets(text);
    const std::size_t n_chars = offsets.size() - 1;
    for (std::size_t i = 0; i < n_chars; ++i)
      for (std::size_t n = lo; n <= hi && i + n <= n_chars; ++n)
        fn(text.substr(offsets[i], offsets[i + n] - offsets[i]));
    return;
  }

  const auto spans = tokenize_spans(text);
  std::string key;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    for (std::size_t n = lo; n <= hi && i + n <= spans.size(); ++n) {
      if (n == 1) {
        fn(text.substr(spans[i].begin, spans[i].end - spans[i].begin));
        continue;
      }
      key.clear();
      for (std::size_t k = i; k < i + n; ++k) {
        if (k > i) key.push_back(' ');
        key.append(text.substr(spans[k].begin, spans[k].end - spans[k].begin));
      }
      fn(std::string_view(key));
    }
  }
}

}  // namespace

void for_each_ngram(std::string_view text, const FeatureConfig& config,
                    const std::function<void(std::string_view)>& fn) {
  visit_ngrams(text, config, fn);
}

NgramCounts extract_ngrams(std::string_view text, const FeatureConfig& config) {
  NgramCounts counts;
  visit_ngrams(text, config, [&](std::string_view g) { ++counts[std::string(g)]; });
  return counts;
}

double smoothed_idf(std::size_t n_docs, std::size_t df) {
  return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
}

FeatureSpace::FeatureSpace(FeatureConfig config, std::vector<std::string> terms, std::vector<std::uint64_t> df,
                           std::size_t fitted_docs, std::string fitted_on)
    : FeatureSpace(config, std::move(terms), df, {}, fitted_docs, std::move(fitted_on)) {}

FeatureSpace::FeatureSpace(FeatureConfig config, std::vector<std::string> terms, std::vector<std::uint64_t> df,
                           std::vector<double> idf, std::size_t fitted_docs, std::string fitted_on)
    : config_(config),
      terms_(std::move(terms)),
      df_(std::move(df)),
      idf_(std::move(idf)),
      fitted_docs_(fitted_docs),
      fitted_on_(std::move(fitted_on)) {
  if (df_.size() != terms_.size()) throw Error(ErrorKind::Schema, "feature space: df/vocabulary size mismatch");
  if (idf_.empty()) {
    idf_.reserve(terms_.size());
    for (auto d : df_) idf_.push_back(smoothed_idf(fitted_docs_, d));
  }
  if (idf_.size() != terms_.size()) throw Error(ErrorKind::Schema, "feature space: idf/vocabulary size mismatch");
  index_.reserve(terms_.size());
  for (std::size_t j = 0; j < terms_.size(); ++j)
    if (!index_.emplace(terms_[j], static_cast<std::uint32_t>(j)).second)
      throw Error(ErrorKind::Schema, "feature space: duplicate n-gram \"" + terms_[j] + "\"");
}

std::int64_t FeatureSpace::column(const std::string& ngram) const {
  const auto it = index_.find(ngram);
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

FeatureSpace fit_feature_space(std::span<const std::string> texts, const FeatureConfig& config) {
  config.validate();
  if (texts.empty()) throw Error(ErrorKind::Data, "cannot fit a feature space on an empty corpus");

  struct Stat {
    std::uint64_t total = 0;
    std::uint64_t df = 0;
  };
  std::unordered_map<std::string, Stat> stats;
  NgramCounts local;
  Sha256 fingerprint;
  for (const auto& text : texts) {
    fingerprint.update_field(text);
    local.clear();
    visit_ngrams(text, config, [&](std::string_view g) { ++local[std::string(g)]; });
    for (auto& [gram, count] : local) {
      auto& s = stats[gram];
      s.total += count;
      s.df += 1;
    }
  }
  if (stats.empty()) throw Error(ErrorKind::Data, "corpus yields no n-grams");

  std::vector<std::pair<const std::string*, Stat>> ranked;
  ranked.reserve(stats.size());
  for (const auto& [gram, s] : stats) ranked.emplace_back(&gram, s);
  const auto by_frequency = [](const auto& a, const auto& b) {
    if (a.second.total != b.second.total) return a.second.total > b.second.total;
    return *a.first < *b.first;
  };
  if (ranked.size() > config.max_features) {
    std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(config.max_features),
                     ranked.end(), by_frequency);
    ranked.resize(config.max_features);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return *a.first < *b.first; });

  std::vector<std::string> terms;
  std::vector<std::uint64_t> df;
  terms.reserve(ranked.size());
  df.reserve(ranked.size());
  for (const auto& [gram, s] : ranked) {
    terms.push_back(*gram);
    df.push_back(s.df);
  }
  return FeatureSpace(config, std::move(terms), std::move(df), texts.size(), fingerprint.hex_digest());
}

FeatureSpace fit_feature_space(const Corpus& docs, const FeatureConfig& config) {
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const auto& d : docs) texts.push_back(d.text);
  return fit_feature_space(std::span<const std::string>(texts), config);
}

SparseVector vectorize(std::string_view text, const FeatureSpace& space) {
  std::unordered_map<std::uint32_t, std::uint32_t> counts;
  std::string key;
  visit_ngrams(text, space.config(), [&](std::string_view g) {
    key.assign(g);
    const auto col = space.column(key);
    if (col >= 0) ++counts[static_cast<std::uint32_t>(col)];
  });

  SparseVector v;
  if (counts.empty()) return v;
  v.indices.reserve(counts.size());
  for (const auto& [col, _] : counts) v.indices.push_back(col);
  std::sort(v.indices.begin(), v.indices.end());
  v.values.reserve(v.indices.size());
  double norm_sq = 0.0;
  for (auto col : v.indices) {
    const double w = static_cast<double>(counts[col]) * space.idf()[col];
    v.values.push_back(w);
    norm_sq += w * w;
  }
  const double norm = std::sqrt(norm_sq);
  for (auto& x : v.values) x /= norm;
  return v;
}

}  // namespace varid
