#include "varid/tagging.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "varid/features.hpp"
#include "varid/rng.hpp"
#include "varid/unicode.hpp"

namespace varid {

namespace {

constexpr std::array<std::string_view, kPosTagCount> kPosNames = {
    "NOUN", "PROPN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "CONJ", "PUNCT", "OTHER"};
constexpr std::array<std::string_view, 5> kNerNames = {"NONE", "PERSON", "LOCATION", "ORGANIZATION", "MISC"};

}  // namespace

std::string_view to_string(PosTag t) { return kPosNames[static_cast<std::size_t>(t)]; }
std::string_view to_string(NerTag t) { return kNerNames[static_cast<std::size_t>(t)]; }

std::optional<PosTag> parse_pos(std::string_view s) {
  for (std::size_t i = 0; i < kPosNames.size(); ++i)
    if (kPosNames[i] == s) return static_cast<PosTag>(i);
  return std::nullopt;
}

std::optional<NerTag> parse_ner(std::string_view s) {
  for (std::size_t i = 0; i < kNerNames.size(); ++i)
    if (kNerNames[i] == s) return static_cast<NerTag>(i);
  return std::nullopt;
}

void validate_tokens(const TaggedDocument& tokens, const std::string& doc_id, const std::string* text) {
  std::vector<std::size_t> offsets;
  if (text) offsets = unicode::code_point_offsets(*text);
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.span.end <= t.span.start)
      throw Error(ErrorKind::Integrity, "document \"" + doc_id + "\": empty or inverted span at token " + std::to_string(i));
    if (i > 0 && t.span.start < prev_end)
      throw Error(ErrorKind::Integrity, "document \"" + doc_id + "\": overlapping spans at token " + std::to_string(i));
    prev_end = t.span.end;
    if (text) {
      if (t.span.end >= offsets.size())
        throw Error(ErrorKind::Integrity, "document \"" + doc_id + "\": span past end of text at token " + std::to_string(i));
      const auto b = offsets[t.span.start];
      const auto e = offsets[t.span.end];
      if (std::string_view(*text).substr(b, e - b) != t.surface)
        throw Error(ErrorKind::Integrity, "document \"" + doc_id + "\": surface \"" + t.surface +
                                         "\" does not match text at token " + std::to_string(i));
    }
  }
}

// ---- lexicon ---------------------------------------------------------------------

namespace {

std::string fold_marks(std::string_view s) {
  std::string out;
  unicode::for_each_code_point(unicode::nfkd(s), [&](char32_t cp, std::size_t, std::size_t) {
    if (!unicode::is_mark(cp)) unicode::append_utf8(out, cp);
  });
  return out;
}

}  // namespace

void Lexicon::add(std::string surface, std::string_view tag) {
  if (surface.empty()) throw Error(ErrorKind::Schema, "lexicon entry with empty surface");
  const auto pos = parse_pos(tag);
  const auto ner = parse_ner(tag);
  if (!pos && (!ner || *ner == NerTag::NONE))
    throw Error(ErrorKind::Schema, "lexicon tag \"" + std::string(tag) + "\" is neither a POS nor an entity type");
  if (surface.size() > 1 && surface.front() == '*') {
    if (!pos) throw Error(ErrorKind::Schema, "suffix rule \"" + surface + "\" needs a POS tag");
    auto suffix = surface.substr(1);
    const auto it = std::find_if(suffixes_.begin(), suffixes_.end(), [&](const auto& s) { return s.first == suffix; });
    if (it != suffixes_.end()) it->second = *pos;
    else suffixes_.emplace_back(std::move(suffix), *pos);
    std::stable_sort(suffixes_.begin(), suffixes_.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    return;
  }
  auto folded = fold_marks(surface);
  if (folded != surface) folded_.try_emplace(std::move(folded), surface);
  auto& entry = entries_[std::move(surface)];
  if (pos) entry.pos = *pos;
  else entry.ner = *ner;
}

const Lexicon::Entry* Lexicon::find(const std::string& surface) const {
  if (const auto it = entries_.find(surface); it != entries_.end()) return &it->second;
  // Text cleaned without diacritics still matches accented entries.
  if (const auto it = folded_.find(surface); it != folded_.end()) return &entries_.at(it->second);
  return nullptr;
}

std::optional<PosTag> Lexicon::suffix_pos(std::string_view word) const {
  for (const auto& [suffix, pos] : suffixes_)
    if (word.size() > suffix.size() && word.substr(word.size() - suffix.size()) == suffix) return pos;
  return std::nullopt;
}

std::vector<std::string> Lexicon::gazetteer() const {
  std::vector<std::string> out;
  for (const auto& [surface, entry] : entries_)
    if (entry.ner) out.push_back(surface);
  std::sort(out.begin(), out.end());
  return out;
}

Lexicon parse_lexicon(std::istream& in) {
  Lexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(ErrorKind::Schema, line_no, "expected surface<TAB>tag");
    try {
      lex.add(line.substr(0, tab), line.substr(tab + 1));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.kind(), line_no, e.what());
    }
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_lexicon(in);
}

const Lexicon& default_lexicon() {
  static const Lexicon lex = [] {
    std::istringstream in{std::string(default_lexicon_source())};
    return parse_lexicon(in);
  }();
  return lex;
}

namespace {

bool is_sentence_end(std::string_view s) { return s == "." || s == "!" || s == "?" || s == "…" || s == ":"; }
bool is_opening(std::string_view s) {
  return s == "\"" || s == "'" || s == "«" || s == "“" || s == "(" || s == "-" || s == "—" || s == "[";
}

}  // namespace

TaggedDocument tag_lexicon(std::string_view text, const Lexicon& lexicon) {
  const auto spans = tokenize_spans(text);
  TaggedDocument out;
  out.reserve(spans.size());

  // Byte offset -> code point offset, advanced monotonically.
  std::size_t byte = 0, chars = 0;
  auto chars_at = [&](std::size_t target) {
    while (byte < target) {
      unicode::decode_at(text, byte);
      ++chars;
    }
    return chars;
  };

  for (std::size_t i = 0; i < spans.size(); ++i) {
    TaggedToken tok;
    tok.surface = std::string(text.substr(spans[i].begin, spans[i].end - spans[i].begin));
    tok.span.start = chars_at(spans[i].begin);
    tok.span.end = chars_at(spans[i].end);

    bool sentence_initial = true;
    for (std::size_t k = i; k > 0; --k) {
      const auto& prev = out[k - 1].surface;
      if (is_opening(prev)) continue;
      sentence_initial = is_sentence_end(prev);
      break;
    }

    const std::string lower = unicode::to_lower(tok.surface);
    const Lexicon::Entry* entry = lexicon.find(tok.surface);
    if (!entry && lower != tok.surface) entry = lexicon.find(lower);

    bool has_word = false, all_number = true;
    unicode::for_each_code_point(tok.surface, [&](char32_t cp, std::size_t, std::size_t) {
      if (unicode::is_word_char(cp)) has_word = true;
      if (!unicode::is_number(cp)) all_number = false;
    });
    std::size_t first = 0;
    const char32_t first_cp = unicode::decode_at(tok.surface, first);

    if (entry) {
      tok.ner = entry->ner.value_or(NerTag::NONE);
      tok.pos = entry->pos ? *entry->pos : entry->ner ? PosTag::PROPN : PosTag::NOUN;
    } else if (all_number) {
      tok.pos = PosTag::NUM;
    } else if (!has_word) {
      tok.pos = PosTag::PUNCT;
    } else if (unicode::is_upper(first_cp) && !sentence_initial) {
      tok.pos = PosTag::PROPN;
      tok.ner = NerTag::MISC;
    } else {
      tok.pos = lexicon.suffix_pos(lower).value_or(PosTag::NOUN);
    }
    out.push_back(std::move(tok));
  }
  return out;
}

// ---- interchange format ------------------------------------------------------------

void write_tagged(std::ostream& out, const std::string& doc_id, const TaggedDocument& tokens) {
  out << "# id = " << doc_id << '\n';
  for (const auto& t : tokens)
    out << t.surface << '\t' << to_string(t.pos) << '\t' << to_string(t.ner) << '\t' << t.span.start << '\t'
        << t.span.end << '\n';
  out << '\n';
}

namespace {

std::size_t parse_offset(std::string_view s, std::size_t line_no) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(ErrorKind::Schema, line_no, "invalid offset \"" + std::string(s) + "\"");
  return v;
}

}  // namespace

TaggedCorpus parse_tagged(std::istream& in, const std::unordered_map<std::string, std::string>* texts) {
  TaggedCorpus corpus;
  std::optional<std::string> current;
  TaggedDocument tokens;

  auto finish = [&] {
    if (!current) return;
    const std::string* text = nullptr;
    if (texts) {
      const auto it = texts->find(*current);
      if (it != texts->end()) text = &it->second;
    }
    validate_tokens(tokens, *current, text);
    if (!corpus.emplace(*current, std::move(tokens)).second)
      throw Error(ErrorKind::Data, "duplicate tagged document \"" + *current + "\"");
    tokens.clear();
    current.reset();
  };

  std::string line;
  std::size_t line_no = 0;
  constexpr std::string_view kHeader = "# id = ";
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      finish();
      continue;
    }
    if (line.rfind(kHeader, 0) == 0) {
      finish();
      current = line.substr(kHeader.size());
      if (current->empty()) throw ParseError(ErrorKind::Schema, line_no, "empty document id");
      continue;
    }
    if (line.front() == '#') continue;
    if (!current) throw ParseError(ErrorKind::Schema, line_no, "token line before `# id = ...` header");

    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (true) {
      const auto tab = rest.find('\t');
      fields.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (fields.size() != 5) throw ParseError(ErrorKind::Schema, line_no, "expected 5 tab-separated fields");
    TaggedToken tok;
    tok.surface = std::string(fields[0]);
    if (tok.surface.empty()) throw ParseError(ErrorKind::Schema, line_no, "empty surface");
    const auto pos = parse_pos(fields[1]);
    if (!pos) throw ParseError(ErrorKind::Schema, line_no, "unknown POS tag \"" + std::string(fields[1]) + "\"");
    const auto ner = parse_ner(fields[2]);
    if (!ner) throw ParseError(ErrorKind::Schema, line_no, "unknown NER tag \"" + std::string(fields[2]) + "\"");
    tok.pos = *pos;
    tok.ner = *ner;
    tok.span = {parse_offset(fields[3], line_no), parse_offset(fields[4], line_no)};
    tokens.push_back(std::move(tok));
  }
  finish();
  return corpus;
}

TaggedCorpus read_tagged(const std::filesystem::path& path, const std::unordered_map<std::string, std::string>* texts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_tagged(in, texts);
}

TaggedDocument PretaggedProvider::tags(const Document& doc) const {
  const auto it = corpus_.find(doc.id);
  if (it == corpus_.end()) throw Error(ErrorKind::Data, "no tags for document \"" + doc.id + "\"");
  return it->second;
}

// ---- delexicalization -------------------------------------------------------------

std::vector<PosTag> PosSet::tags() const {
  std::vector<PosTag> out;
  for (std::size_t i = 0; i < kPosTagCount; ++i)
    if (bits_.test(i)) out.push_back(static_cast<PosTag>(i));
  return out;
}

PosSet default_pos_maskable() { return {PosTag::NOUN, PosTag::PROPN, PosTag::VERB, PosTag::ADJ}; }

void DelexPolicy::validate() const {
  if (!(p_pos >= 0.0 && p_pos <= 1.0) || !(p_ner >= 0.0 && p_ner <= 1.0))
    throw Error(ErrorKind::Usage, "delexicalization probabilities must lie in [0, 1]");
}

ordered_json to_json(const DelexPolicy& p) {
  ordered_json j;
  j["p_pos"] = p.p_pos;
  j["p_ner"] = p.p_ner;
  j["pos_maskable"] = ordered_json::array();
  for (auto t : p.pos_maskable.tags()) j["pos_maskable"].push_back(std::string(to_string(t)));
  j["seed"] = p.seed;
  return j;
}

DelexPolicy delex_policy_from_json(const ordered_json& j) {
  DelexPolicy p;
  p.p_pos = j.at("p_pos").get<double>();
  p.p_ner = j.at("p_ner").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.pos_maskable = PosSet{};
  for (const auto& name : j.at("pos_maskable")) {
    const auto t = parse_pos(name.get<std::string>());
    if (!t) throw Error(ErrorKind::Schema, "unknown POS tag in delex policy");
    p.pos_maskable.insert(*t);
  }
  return p;
}

bool token_masked(const TaggedToken& token, std::size_t index, const DelexPolicy& policy, std::string_view doc_id) {
  if (token.ner != NerTag::NONE) {
    if (policy.p_ner <= 0.0) return false;
    return keyed_uniform(policy.seed, doc_id, index) < policy.p_ner;
  }
  if (!policy.pos_maskable.contains(token.pos) || policy.p_pos <= 0.0) return false;
  return keyed_uniform(policy.seed, doc_id, index) < policy.p_pos;
}

std::string delexicalize(std::string_view text, const TaggedDocument& tokens, const DelexPolicy& policy,
                         std::string_view doc_id) {
  if (policy.is_identity()) return std::string(text);
  const auto offsets = unicode::code_point_offsets(text);
  const std::size_t n_chars = offsets.size() - 1;
  std::string out;
  out.reserve(text.size());
  std::size_t cursor = 0;  // byte offset
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.span.end > n_chars || t.span.end <= t.span.start)
      throw Error(ErrorKind::Integrity, "document \"" + std::string(doc_id) + "\": token span outside text");
    const auto b = offsets[t.span.start];
    const auto e = offsets[t.span.end];
    if (b < cursor) throw Error(ErrorKind::Integrity, "document \"" + std::string(doc_id) + "\": overlapping spans");
    out.append(text.substr(cursor, b - cursor));
    if (token_masked(t, i, policy, doc_id)) {
      out += t.ner != NerTag::NONE ? to_string(t.ner) : to_string(t.pos);
    } else {
      out.append(text.substr(b, e - b));
    }
    cursor = e;
  }
  out.append(text.substr(cursor));
  return out;
}

}  // namespace varid
