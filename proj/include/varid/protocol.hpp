#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varid/corpus.hpp"
#include "varid/eval.hpp"
#include "varid/features.hpp"
#include "varid/model.hpp"
#include "varid/tagging.hpp"

namespace varid {

struct SweepPoint {
  double p_pos = 0.0;
  double p_ner = 0.0;
  FeatureConfig features;
  double alpha = 1.0;
  bool operator==(const SweepPoint&) const = default;
};

ordered_json to_json(const SweepPoint& p);
SweepPoint sweep_point_from_json(const ordered_json& j);

/// Axes of a full-factorial grid. Points are enumerated with p_pos outermost,
/// then p_ner, analyzer, ngram_range, max_features, lowercase, alpha.
struct SweepGrid {
  std::vector<double> p_pos{0.0};
  std::vector<double> p_ner{0.0};
  std::vector<Analyzer> analyzer{Analyzer::Word};
  std::vector<std::pair<int, int>> ngram_range{{1, 1}};
  std::vector<std::size_t> max_features{10000};
  std::vector<bool> lowercase{true};
  std::vector<double> alpha{1.0};

  std::vector<SweepPoint> points() const;
  std::size_t size() const;
};

/// Grid file: `key = [v, ...]` lines, `#` comments. Keys are the SweepGrid
/// field names; ngram_range takes pairs, e.g. `ngram_range = [[1,1],[1,3]]`.
/// Absent keys keep their single default value.
SweepGrid parse_grid(std::istream& in);
SweepGrid load_grid(const std::filesystem::path& path);
/// 6 x 6 delexicalization pairs times 168 feature configurations.
SweepGrid full_grid();
ordered_json to_json(const SweepGrid& g);

struct SweepRecord {
  SweepPoint point;
  Domain train_domain = Domain::Unknown;
  std::map<Domain, double> per_heldout_f1;
  double mean_f1 = 0.0;
};

ordered_json to_json(const SweepRecord& r);
SweepRecord sweep_record_from_json(const ordered_json& j);
std::vector<SweepRecord> read_sweep_log(const std::filesystem::path& path);
void write_sweep_log(const std::vector<SweepRecord>& records, const std::filesystem::path& path);

/// What a step-1 job is about to score; `texts` are the exact strings vectorized.
struct EvaluationEvent {
  const SweepPoint& point;
  Domain train_domain;
  Domain eval_domain;
  const Corpus& docs;
  std::span<const std::string_view> texts;
};

struct Step1Options {
  std::uint64_t delex_seed = 0;
  PosSet pos_maskable = default_pos_maskable();
  /// Tags for training documents; the bundled lexicon tagger when null.
  const TagProvider* tagger = nullptr;
  std::size_t workers = 1;
  /// Checkpoint log; completed points found there are not recomputed.
  std::optional<std::filesystem::path> log_path;
  /// Defaults to every split domain except the training one.
  std::optional<std::vector<Domain>> heldout;
  /// Called (serialised) before each held-out evaluation.
  std::function<void(const EvaluationEvent&)> observer;
  /// Called (serialised) after each completed point.
  std::function<void(const SweepRecord&)> on_record;
};

/// Leave-one-domain-out sweep: for each point, delexicalizes only the
/// training split of `train_domain`, fits features, trains NB and scores
/// macro-F1 on each held-out domain's validation split. Records come back in
/// grid order. Throws Error(Protocol) if the held-out set contains the
/// training domain.
std::vector<SweepRecord> run_step1(const ProtocolSplits& splits, std::span<const SweepPoint> grid, Domain train_domain,
                                   const Step1Options& options = {});

enum class SurfaceMode { BestFeatureConfig, MarginalMean };

/// (p_pos, p_ner) -> mean F1 across train domains, taking the best feature
/// configuration per pair or the mean over all of them.
std::map<std::pair<double, double>, double> aggregate_delex_surface(std::span<const SweepRecord> records,
                                                                   SurfaceMode mode = SurfaceMode::BestFeatureConfig);

/// Highest mean of mean_f1 across train domains; ties go to smaller
/// max_features, narrower ngram range, lower p_pos, lower p_ner, then first seen.
SweepPoint select_best(std::span<const SweepRecord> records);

struct Step2Options {
  std::uint64_t sample_seed = 0;
  std::uint64_t delex_seed = 0;
  PosSet pos_maskable = default_pos_maskable();
  const TagProvider* tagger = nullptr;
  std::string created_at = "1970-01-01T00:00:00Z";
  ordered_json extra_provenance = ordered_json::object();
};

/// Undersample to balance every (domain, label) cell, delexicalize with the
/// point's policy, fit features and train NB on everything.
NBModel train_step2(const Corpus& corpus, const SweepPoint& point, const Step2Options& options = {});

Corpus delexicalize_corpus(const Corpus& corpus, const DelexPolicy& policy, const TagProvider& tagger);
void export_delexicalized(const Corpus& corpus, const DelexPolicy& policy, const TagProvider& tagger,
                          const std::filesystem::path& path);

}  // namespace varid
