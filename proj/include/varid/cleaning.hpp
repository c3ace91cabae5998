#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "varid/corpus.hpp"
#include "varid/features.hpp"
#include "varid/json_util.hpp"

namespace varid {

struct TokenStats {
  std::size_t doc_count = 0;
  std::size_t total_tokens = 0;
  // Absent for an empty cell.
  std::optional<std::size_t> min;
  std::optional<std::size_t> max;
  std::optional<double> mean;
  std::optional<double> std;  // population
};

TokenStats token_stats(std::span<const std::size_t> counts);

struct CleaningReport {
  std::size_t input_count = 0;
  std::size_t output_count = 0;
  std::size_t dropped_null_empty = 0;
  std::size_t dropped_duplicates = 0;
  std::size_t dropped_iqr = 0;
  /// Domains too small for the IQR rule (< 4 documents); passed through unfiltered.
  std::vector<Domain> iqr_passthrough;
  std::map<Domain, TokenStats> per_domain;
  std::map<std::pair<Domain, Label>, TokenStats> per_cell;
};

ordered_json to_json(const CleaningReport& report);

/// NFKD, control characters removed, typographic quotes and dashes mapped to
/// ASCII, whitespace collapsed and trimmed. Without keep_diacritics the
/// combining marks are stripped and the output is pure ASCII; with it the
/// marks are recomposed (NFKC).
std::string normalize_text(std::string_view text, bool keep_diacritics);

struct DropResult {
  Corpus docs;
  std::size_t dropped_null_empty = 0;
  std::size_t dropped_duplicates = 0;
};

/// Drops documents whose normalized text is empty, and later documents whose
/// normalized text repeats an earlier one. Surviving documents are unchanged.
DropResult drop_invalid(const Corpus& docs, bool keep_diacritics = false);

/// Removes markup from an HTML page and keeps only paragraphs that look like
/// running text (link density and stopword density heuristics). Text
/// without markup is returned unchanged.
std::string strip_boilerplate(std::string_view html);

/// Linear interpolation between order statistics; `sorted` must be ascending.
double linear_quantile(std::span<const double> sorted, double p);

struct TukeyFence {
  double lo;
  double hi;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

TukeyFence tukey_fence(std::span<const std::size_t> counts);

struct IqrResult {
  Corpus docs;
  std::size_t dropped = 0;
  std::vector<Domain> passthrough;
};

/// Per domain, keeps documents whose token count lies inside
/// [Q1 - 1.5 IQR, Q3 + 1.5 IQR]. Order is preserved.
IqrResult iqr_filter(const Corpus& docs, const TokenCounter& counter = count_tokens);

/// Token statistics per domain and per (domain, label) cell.
CleaningReport corpus_stats(const Corpus& docs, const TokenCounter& counter = count_tokens);

struct CleaningOptions {
  bool keep_diacritics = false;
  bool strip_web_boilerplate = true;
  bool iqr = true;
};

struct CleanResult {
  Corpus docs;
  CleaningReport report;
};

/// Full pipeline: boilerplate stripping (Web), normalization, drop_invalid,
/// IQR filter, statistics on the survivors.
CleanResult clean_corpus(const Corpus& docs, const CleaningOptions& options,
                         const TokenCounter& counter = count_tokens);

}  // namespace varid
