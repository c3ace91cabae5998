#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "varid/corpus.hpp"
#include "varid/json_util.hpp"

namespace varid {

// ---- classification metrics --------------------------------------------------------

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;     // gold count
  bool absent_in_gold = false;  // F1 defined as 0
};

struct ClassificationReport {
  std::array<ClassMetrics, 2> per_class{};  // EP, BP
  /// confusion[gold][pred]
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

/// Per-class precision, recall and F1 plus their unweighted mean.
ClassificationReport confusion_and_f1(std::span<const Label> preds, std::span<const Label> gold);
ordered_json to_json(const ClassificationReport& r);

// ---- annotation agreement ---------------------------------------------------------------

struct AnnotationItem {
  std::string id;
  Domain domain = Domain::Unknown;
  std::vector<Label> labels;  // EP, BP or Undetermined
  std::optional<Label> silver;
};

struct AnnotationMatrix {
  std::vector<AnnotationItem> items;
  std::size_t annotator_count = 0;

  /// Throws Error(Data) on a wrong label count or a label outside {EP, BP, Undetermined}.
  void validate() const;
};

AnnotationMatrix parse_annotations(std::istream& in);
AnnotationMatrix load_annotations(const std::filesystem::path& path);

/// Reduced fraction num/den.
struct Rational {
  __int128 num = 0;
  __int128 den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

/// Fleiss' kappa over the categories EP, BP, Undetermined, computed exactly.
/// With exclude_undetermined, items where any annotator chose Undetermined
/// are dropped first.
Rational fleiss_kappa_exact(const AnnotationMatrix& m, bool exclude_undetermined);
double fleiss_kappa(const AnnotationMatrix& m, bool exclude_undetermined);

struct MajorityStats {
  std::size_t items = 0;
  std::size_t majority_items = 0;
  double majority_rate = 0.0;
  /// Over strict-majority items with a silver label; a majority of
  /// Undetermined counts as correct.
  std::optional<double> silver_accuracy;
  double undetermined_rate = 0.0;
};

MajorityStats majority_and_accuracy(const AnnotationMatrix& m);

struct AgreementSummary {
  std::size_t items = 0;
  std::optional<double> fleiss_kappa;
  std::optional<double> fleiss_kappa_wo_undetermined;
  double majority_rate = 0.0;
  std::optional<double> silver_accuracy;
  double undetermined_rate = 0.0;
};

struct AgreementReport {
  AgreementSummary overall;
  std::map<Domain, AgreementSummary> per_domain;
};

/// Kappa values are absent where undefined (fewer than 2 items, or all mass
/// on one category without perfect agreement).
AgreementReport agreement_report(const AnnotationMatrix& m);
ordered_json to_json(const AgreementReport& r);
std::string format_agreement_table(const AgreementReport& r);

// ---- benchmarks -----------------------------------------------------------------------

enum class BenchmarkFormat { DSLTL, FRMT, JSONL };
std::optional<BenchmarkFormat> parse_benchmark_format(std::string_view s);

struct DocPair {
  std::string pair_id;
  std::string bucket;
  std::string ep_id;
  std::string bp_id;
};

struct Benchmark {
  Corpus docs;
  std::vector<DocPair> pairs;
  std::size_t ep_count = 0;
  std::size_t bp_count = 0;
  std::size_t dropped_both = 0;
  std::size_t dropped_empty = 0;
  std::size_t unpaired = 0;
};

/// DSLTL: tab-separated `id, text, label` rows (optional header); PT-PT and
/// PT-BR map to EP and BP, rows labeled PT or Both are dropped.
/// FRMT: a directory (searched recursively) of `*_pt-PT.tsv` / `*_pt-BR.tsv`
/// files with `source, translation` rows; sides sharing a file stem and
/// source sentence are paired, the bucket is taken from the file name.
/// JSONL: the corpus format.
Benchmark ingest_benchmark(const std::filesystem::path& path, BenchmarkFormat format);
ordered_json benchmark_report(const Benchmark& b);

struct BucketStats {
  std::size_t pairs = 0;
  std::size_t same_label = 0;
  double same_label_rate = 0.0;
  ClassificationReport metrics;
};

struct PairedAnalysis {
  std::size_t pairs = 0;
  std::size_t same_label = 0;
  double same_label_pair_rate = 0.0;
  std::map<std::string, BucketStats> per_bucket;
};

/// Throws Error(Data) naming the pair id when a member has no prediction.
PairedAnalysis paired_bucket_analysis(const std::unordered_map<std::string, Label>& preds,
                                      std::span<const DocPair> pairs);
ordered_json to_json(const PairedAnalysis& a);

}  // namespace varid
