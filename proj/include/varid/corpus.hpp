#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "varid/common.hpp"

namespace varid {

struct Document {
  std::string id;
  std::string text;
  Domain domain = Domain::Unknown;
  Label label = Label::Unlabeled;
  std::optional<std::string> source;

  bool operator==(const Document&) const = default;
};

using Corpus = std::vector<Document>;

// ---- JSONL -----------------------------------------------------------------

/// One JSON object per non-empty line with keys id, text and optionally
/// domain, label, source. Throws ParseError (with line number) on malformed
/// lines and Error(Data) on duplicate ids.
Corpus parse_jsonl(std::istream& in);
Corpus read_jsonl(const std::filesystem::path& path);

/// Always emits id, text, domain, label; source only when present.
void write_jsonl(std::ostream& out, const Corpus& docs);
void write_jsonl(const std::filesystem::path& path, const Corpus& docs);
std::string to_jsonl_line(const Document& doc);

/// SHA-256 over (id, text, domain, label) of every document in order.
std::string corpus_fingerprint(const Corpus& docs);

// ---- silver labeling ---------------------------------------------------------

enum class MatcherKind { SourceEquals, SourceSuffix, Tld };

struct LabelRule {
  MatcherKind kind;
  std::string pattern;
  Label label;
};

struct LabelRuleSet {
  std::vector<LabelRule> rules;
  Label default_label = Label::Unlabeled;
};

/// Host part of a URL-ish source ("https://a.b.pt:80/x" -> "a.b.pt"), lowercased.
std::string source_host(std::string_view source);

bool rule_matches(const LabelRule& rule, const std::optional<std::string>& source);

/// Labels an Unlabeled document by the first matching rule; other labels pass through.
Document silver_label(Document doc, const LabelRuleSet& rules);

/// Rule file, one `key = value` per line, `#` comments:
///
///     default = Unlabeled
///     tld = .pt => EP
///     source-equals = Folha de São Paulo => BP
///     source-suffix = .gov.br => BP
///
/// Rules keep declaration order.
LabelRuleSet parse_label_rules(std::istream& in);
LabelRuleSet load_label_rules(const std::filesystem::path& path);

// ---- protocol splits ---------------------------------------------------------

struct SplitOptions {
  std::size_t train_per_domain = 8000;
  std::size_t val_per_domain = 1000;
  std::uint64_t seed = 0;
  /// Shrink a short domain proportionally instead of failing.
  bool allow_shrink = false;
};

struct ProtocolSplits {
  std::map<Domain, Corpus> train;
  std::map<Domain, Corpus> val;
  std::uint64_t seed = 0;

  std::vector<Domain> domains() const;
};

/// Per-domain balanced train/validation samples drawn without replacement.
/// Undetermined documents are skipped; Unlabeled or Unknown-domain documents
/// are rejected.
ProtocolSplits build_protocol_splits(const Corpus& corpus, const SplitOptions& options);

/// Reduces every (domain, label) cell to the smallest cell's size.
/// Survivors keep their corpus order.
Corpus undersample_balanced(const Corpus& corpus, std::uint64_t seed);

/// Splits directory layout: train_<Domain>.jsonl, val_<Domain>.jsonl, splits.json.
void write_splits(const std::filesystem::path& dir, const ProtocolSplits& splits);
ProtocolSplits read_splits(const std::filesystem::path& dir);

}  // namespace varid
