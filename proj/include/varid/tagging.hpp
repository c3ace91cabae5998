#pragma once

#include <bitset>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "varid/corpus.hpp"
#include "varid/json_util.hpp"

namespace varid {

enum class PosTag { NOUN, PROPN, VERB, ADJ, ADV, PRON, DET, ADP, NUM, CONJ, PUNCT, OTHER };
inline constexpr std::size_t kPosTagCount = 12;

enum class NerTag { NONE, PERSON, LOCATION, ORGANIZATION, MISC };

std::string_view to_string(PosTag t);
std::string_view to_string(NerTag t);
std::optional<PosTag> parse_pos(std::string_view s);
std::optional<NerTag> parse_ner(std::string_view s);

/// Character span [start, end) in code points of the source text.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const CharSpan&) const = default;
};

struct TaggedToken {
  std::string surface;
  PosTag pos = PosTag::OTHER;
  NerTag ner = NerTag::NONE;
  CharSpan span;
  bool operator==(const TaggedToken&) const = default;
};

using TaggedDocument = std::vector<TaggedToken>;

/// Spans must be non-empty, non-overlapping and increasing. When `text` is
/// given, each surface must equal the text under its span.
void validate_tokens(const TaggedDocument& tokens, const std::string& doc_id, const std::string* text = nullptr);

// ---- lexicon tagger ------------------------------------------------------------

/// Tag dictionary. File format: one `surface<TAB>tag` entry per line, where
/// tag is a POS name (NOUN, VERB, ...) or an entity type (PERSON, LOCATION,
/// ORGANIZATION, MISC). A surface starting with `*` is a suffix rule for
/// unknown lowercase words (`*mente<TAB>ADV`). `#` starts a comment line.
class Lexicon {
 public:
  struct Entry {
    std::optional<PosTag> pos;
    std::optional<NerTag> ner;
  };

  void add(std::string surface, std::string_view tag);
  const Entry* find(const std::string& surface) const;
  /// Longest matching suffix rule.
  std::optional<PosTag> suffix_pos(std::string_view lower_word) const;

  /// Surfaces carrying an entity tag.
  std::vector<std::string> gazetteer() const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, Entry> entries_;
  std::unordered_map<std::string, std::string> folded_;  // without combining marks -> surface
  std::vector<std::pair<std::string, PosTag>> suffixes_;  // longest first
};

Lexicon parse_lexicon(std::istream& in);
Lexicon load_lexicon(const std::filesystem::path& path);
/// The bundled Portuguese lexicon.
const Lexicon& default_lexicon();
std::string_view default_lexicon_source();

/// Tags with exact lookup, then lowercase lookup, then numbers and
/// punctuation; unknown capitalised words after the first of a sentence
/// become PROPN/MISC, other unknown words use suffix rules, else NOUN.
TaggedDocument tag_lexicon(std::string_view text, const Lexicon& lexicon);

// ---- interchange format --------------------------------------------------------

/// One JSON-free tagged corpus:
///
///     # id = doc-1
///     O<TAB>DET<TAB>NONE<TAB>0<TAB>1
///     João<TAB>PROPN<TAB>PERSON<TAB>2<TAB>6
///     <blank line>
using TaggedCorpus = std::map<std::string, TaggedDocument>;

void write_tagged(std::ostream& out, const std::string& doc_id, const TaggedDocument& tokens);

/// `texts`, when given, maps doc id to source text for span checks.
TaggedCorpus parse_tagged(std::istream& in, const std::unordered_map<std::string, std::string>* texts = nullptr);
TaggedCorpus read_tagged(const std::filesystem::path& path,
                         const std::unordered_map<std::string, std::string>* texts = nullptr);

/// Supplies tags for a document: the built-in tagger or a pre-tagged file.
class TagProvider {
 public:
  virtual ~TagProvider() = default;
  virtual TaggedDocument tags(const Document& doc) const = 0;
};

class LexiconTagProvider final : public TagProvider {
 public:
  explicit LexiconTagProvider(const Lexicon& lexicon) : lexicon_(&lexicon) {}
  TaggedDocument tags(const Document& doc) const override { return tag_lexicon(doc.text, *lexicon_); }

 private:
  const Lexicon* lexicon_;
};

class PretaggedProvider final : public TagProvider {
 public:
  explicit PretaggedProvider(TaggedCorpus corpus) : corpus_(std::move(corpus)) {}
  /// Throws Error(Data) naming the id when the document has no tags.
  TaggedDocument tags(const Document& doc) const override;

 private:
  TaggedCorpus corpus_;
};

// ---- delexicalization --------------------------------------------------------------

class PosSet {
 public:
  PosSet() = default;
  PosSet(std::initializer_list<PosTag> tags) {
    for (auto t : tags) insert(t);
  }
  void insert(PosTag t) { bits_.set(static_cast<std::size_t>(t)); }
  bool contains(PosTag t) const { return bits_.test(static_cast<std::size_t>(t)); }
  std::vector<PosTag> tags() const;
  bool operator==(const PosSet&) const = default;

 private:
  std::bitset<kPosTagCount> bits_;
};

PosSet default_pos_maskable();

struct DelexPolicy {
  double p_pos = 0.0;
  double p_ner = 0.0;
  PosSet pos_maskable = default_pos_maskable();
  std::uint64_t seed = 0;

  void validate() const;
  bool is_identity() const { return p_pos == 0.0 && p_ner == 0.0; }
  bool operator==(const DelexPolicy&) const = default;
};

ordered_json to_json(const DelexPolicy& p);
DelexPolicy delex_policy_from_json(const ordered_json& j);

/// Replaces entity tokens by their NER label with probability p_ner, and
/// other tokens whose POS is maskable by the POS label with probability
/// p_pos. Each token draws once from a hash of (seed, doc_id, token index).
/// Text between tokens is copied verbatim.
std::string delexicalize(std::string_view text, const TaggedDocument& tokens, const DelexPolicy& policy,
                         std::string_view doc_id);

/// Whether token `index` of `doc_id` is masked under `policy`.
bool token_masked(const TaggedToken& token, std::size_t index, const DelexPolicy& policy, std::string_view doc_id);

}  // namespace varid
