#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "varid/corpus.hpp"

namespace varid {

// ---- tokenization ------------------------------------------------------------

/// Byte range [begin, end) of a token within its text.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const TokenSpan&) const = default;
};

/// Rule-based word tokenizer approximating a Portuguese word tokenizer:
/// maximal runs of letters, digits and combining marks, keeping a hyphen or
/// apostrophe that sits between two word characters ("viu-a", "d'água");
/// every other non-space character is a token of its own.
std::vector<TokenSpan> tokenize_spans(std::string_view text);
std::vector<std::string> tokenize_words(std::string_view text);
std::size_t count_tokens(std::string_view text);

using TokenCounter = std::function<std::size_t(std::string_view)>;

// ---- n-grams -----------------------------------------------------------------

enum class Analyzer { Word, Char };

std::string_view to_string(Analyzer a);
std::optional<Analyzer> parse_analyzer(std::string_view s);

struct FeatureConfig {
  Analyzer analyzer = Analyzer::Word;
  int ngram_lo = 1;
  int ngram_hi = 1;
  std::size_t max_features = 10000;
  bool lowercase = true;

  void validate() const;
  bool operator==(const FeatureConfig&) const = default;
};

using NgramCounts = std::unordered_map<std::string, std::uint32_t>;

/// Calls fn(ngram) for every n-gram occurrence, lo <= n <= hi.
/// The string_view is only valid during the call.
void for_each_ngram(std::string_view text, const FeatureConfig& config,
                    const std::function<void(std::string_view)>& fn);

NgramCounts extract_ngrams(std::string_view text, const FeatureConfig& config);

// ---- TF-IDF --------------------------------------------------------------------

struct SparseVector {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;

  bool empty() const { return indices.empty(); }
  std::size_t size() const { return indices.size(); }
  bool operator==(const SparseVector&) const = default;
};

/// ln((1 + n) / (1 + df)) + 1
double smoothed_idf(std::size_t n_docs, std::size_t df);

class FeatureSpace {
 public:
  FeatureSpace() = default;
  /// idf computed from df and fitted_docs.
  FeatureSpace(FeatureConfig config, std::vector<std::string> terms, std::vector<std::uint64_t> df,
               std::size_t fitted_docs, std::string fitted_on);
  /// idf taken as stored (used when loading an artifact).
  FeatureSpace(FeatureConfig config, std::vector<std::string> terms, std::vector<std::uint64_t> df,
               std::vector<double> idf, std::size_t fitted_docs, std::string fitted_on);

  const FeatureConfig& config() const { return config_; }
  /// n-grams in column order.
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  const std::vector<std::uint64_t>& df() const { return df_; }
  std::size_t fitted_docs() const { return fitted_docs_; }
  const std::string& fitted_on() const { return fitted_on_; }
  std::size_t dimension() const { return terms_.size(); }

  /// Column of an n-gram, or -1.
  std::int64_t column(const std::string& ngram) const;

 private:
  FeatureConfig config_;
  std::vector<std::string> terms_;
  std::vector<std::uint64_t> df_;
  std::vector<double> idf_;
  std::size_t fitted_docs_ = 0;
  std::string fitted_on_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Keeps the max_features n-grams with the highest total count (ties by
/// byte-wise n-gram order); columns are assigned in byte-wise order.
FeatureSpace fit_feature_space(std::span<const std::string> texts, const FeatureConfig& config);
FeatureSpace fit_feature_space(const Corpus& docs, const FeatureConfig& config);

/// Raw counts times idf, L2-normalised. Out-of-vocabulary n-grams are ignored.
SparseVector vectorize(std::string_view text, const FeatureSpace& space);

}  // namespace varid
