#include "varid/cleaning.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "varid/unicode.hpp"

namespace varid {

TokenStats token_stats(std::span<const std::size_t> counts) {
  TokenStats s;
  s.doc_count = counts.size();
  if (counts.empty()) return s;
  const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
  s.min = *mn;
  s.max = *mx;
  for (auto c : counts) s.total_tokens += c;
  const double mean = static_cast<double>(s.total_tokens) / static_cast<double>(counts.size());
  double ss = 0.0;
  for (auto c : counts) ss += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
  s.mean = mean;
  s.std = std::sqrt(ss / static_cast<double>(counts.size()));
  return s;
}

namespace {

ordered_json stats_json(const TokenStats& s) {
  ordered_json j;
  j["doc_count"] = s.doc_count;
  j["total_tokens"] = s.total_tokens;
  j["min"] = s.min ? ordered_json(*s.min) : ordered_json(nullptr);
  j["max"] = s.max ? ordered_json(*s.max) : ordered_json(nullptr);
  j["mean"] = s.mean ? ordered_json(*s.mean) : ordered_json(nullptr);
  j["std"] = s.std ? ordered_json(*s.std) : ordered_json(nullptr);
  return j;
}

}  // namespace

ordered_json to_json(const CleaningReport& r) {
  ordered_json j;
  j["input_count"] = r.input_count;
  j["output_count"] = r.output_count;
  j["dropped_null_empty"] = r.dropped_null_empty;
  j["dropped_duplicates"] = r.dropped_duplicates;
  j["dropped_iqr"] = r.dropped_iqr;
  j["iqr_passthrough"] = ordered_json::array();
  for (auto d : r.iqr_passthrough) j["iqr_passthrough"].push_back(std::string(to_string(d)));
  j["per_domain_token_stats"] = ordered_json::object();
  for (const auto& [d, s] : r.per_domain) j["per_domain_token_stats"][std::string(to_string(d))] = stats_json(s);
  j["per_cell_token_stats"] = ordered_json::array();
  for (const auto& [cell, s] : r.per_cell) {
    auto e = stats_json(s);
    e["domain"] = std::string(to_string(cell.first));
    e["label"] = std::string(to_string(cell.second));
    j["per_cell_token_stats"].push_back(std::move(e));
  }
  return j;
}

// ---- normalization -----------------------------------------------------------

namespace {

std::optional<char> ascii_punct(char32_t cp) {
  switch (cp) {
    case U'‘': case U'’': case U'‚': case U'‛': case U'′': case U'ʼ': case U'`': case U'´':
      return '\'';
    case U'“': case U'”': case U'„': case U'‟': case U'«': case U'»': case U'″':
      return '"';
    case U'‐': case U'‑': case U'‒': case U'–': case U'—': case U'―': case U'−': case U'﹘': case U'﹣':
      return '-';
    default:
      return std::nullopt;
  }
}

std::string_view ascii_letter(char32_t cp) {
  switch (cp) {
    case U'ß': return "ss";
    case U'æ': return "ae";
    case U'Æ': return "AE";
    case U'œ': return "oe";
    case U'Œ': return "OE";
    case U'ø': return "o";
    case U'Ø': return "O";
    case U'đ': case U'ð': return "d";
    case U'Đ': case U'Ð': return "D";
    case U'ł': return "l";
    case U'Ł': return "L";
    case U'þ': return "th";
    case U'Þ': return "TH";
    case U'ı': return "i";
    default: return {};
  }
}

}  // namespace

std::string normalize_text(std::string_view text, bool keep_diacritics) {
  const std::string decomposed = unicode::nfkd(text);
  std::string filtered;
  filtered.reserve(decomposed.size());
  unicode::for_each_code_point(decomposed, [&](char32_t cp, std::size_t, std::size_t) {
    if (unicode::is_space(cp)) {
      filtered.push_back(' ');
      return;
    }
    if (unicode::is_control(cp)) return;
    if (auto p = ascii_punct(cp)) {
      filtered.push_back(*p);
      return;
    }
    if (cp < 0x80 || keep_diacritics) {
      unicode::append_utf8(filtered, cp);
      return;
    }
    if (unicode::is_mark(cp)) return;
    filtered += ascii_letter(cp);
  });

  // Kept marks are recomposed with their base letters.
  const std::string reordered = keep_diacritics ? unicode::nfkc(filtered) : filtered;

  std::string out;
  out.reserve(reordered.size());
  for (char c : reordered) {
    if (c == ' ') {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

DropResult drop_invalid(const Corpus& docs, bool keep_diacritics) {
  DropResult r;
  std::unordered_set<std::string> seen;
  for (const auto& doc : docs) {
    auto norm = normalize_text(doc.text, keep_diacritics);
    if (norm.empty()) {
      ++r.dropped_null_empty;
      continue;
    }
    if (!seen.insert(std::move(norm)).second) {
      ++r.dropped_duplicates;
      continue;
    }
    r.docs.push_back(doc);
  }
  return r;
}

// ---- boilerplate ----------------------------------------------------------------

namespace {

constexpr double kMaxLinkDensity = 0.2;
constexpr std::size_t kStopwordTestMinWords = 10;
constexpr double kMinStopwordDensity = 0.2;

const std::unordered_set<std::string>& portuguese_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a", "à", "ao", "aos", "aquela", "aquele", "aqui", "as", "às", "até", "com", "como", "da", "das",
      "de", "dela", "dele", "depois", "do", "dos", "e", "é", "ela", "ele", "eles", "em", "entre", "era",
      "essa", "esse", "esta", "está", "este", "eu", "for", "foi", "há", "isso", "isto", "já", "lhe",
      "mais", "mas", "me", "mesmo", "muito", "na", "nas", "nem", "no", "nos", "nós", "num", "numa",
      "o", "os", "ou", "para", "pela", "pelo", "por", "porque", "quando", "que", "quem", "se", "sem",
      "ser", "seu", "sua", "são", "também", "te", "tem", "ter", "um", "uma", "você", "vai", "foram",
      "sobre", "seus", "suas", "onde", "ainda", "assim", "então", "pois", "só", "essa", "estão", "sido"};
  return words;
}

const std::unordered_set<std::string>& block_tags() {
  static const std::unordered_set<std::string> tags = {
      "p", "div", "br", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "tr", "td", "th",
      "table", "section", "article", "header", "footer", "nav", "aside", "blockquote", "pre",
      "form", "main", "dd", "dt", "dl", "hr", "figure", "figcaption", "title", "body", "html"};
  return tags;
}

const std::unordered_set<std::string>& skipped_tags() {
  static const std::unordered_set<std::string> tags = {"script", "style", "noscript", "template",
                                                       "head", "iframe", "svg", "object"};
  return tags;
}

bool looks_like_markup(std::string_view s) {
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    if (s[i] == '<' && (std::isalpha(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '/' || s[i + 1] == '!'))
      return true;
  return false;
}

std::string decode_entity(std::string_view name) {
  static const std::unordered_map<std::string, std::string_view> named = {
      {"amp", "&"},     {"lt", "<"},       {"gt", ">"},       {"quot", "\""},   {"apos", "'"},
      {"nbsp", " "},    {"aacute", "á"},   {"eacute", "é"},   {"iacute", "í"},  {"oacute", "ó"},
      {"uacute", "ú"},  {"atilde", "ã"},   {"otilde", "õ"},   {"ccedil", "ç"},  {"acirc", "â"},
      {"ecirc", "ê"},   {"ocirc", "ô"},    {"agrave", "à"},   {"Aacute", "Á"},  {"Eacute", "É"},
      {"Iacute", "Í"},  {"Oacute", "Ó"},   {"Uacute", "Ú"},   {"Atilde", "Ã"},  {"Otilde", "Õ"},
      {"Ccedil", "Ç"},  {"Acirc", "Â"},    {"Ecirc", "Ê"},    {"Ocirc", "Ô"},   {"Agrave", "À"},
      {"laquo", "«"},   {"raquo", "»"},    {"ndash", "–"},    {"mdash", "—"},   {"hellip", "…"}};
  if (!name.empty() && name[0] == '#') {
    std::uint32_t cp = 0;
    const bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
    const auto digits = name.substr(hex ? 2 : 1);
    if (digits.empty()) return {};
    for (char c : digits) {
      const int v = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                    : hex && std::isxdigit(static_cast<unsigned char>(c))
                        ? std::tolower(static_cast<unsigned char>(c)) - 'a' + 10
                        : -1;
      if (v < 0 || cp > 0x10FFFF) return {};
      cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
    }
    if (cp == 0 || cp > 0x10FFFF) return {};
    std::string out;
    unicode::append_utf8(out, static_cast<char32_t>(cp));
    return out;
  }
  const auto it = named.find(std::string(name));
  return it == named.end() ? std::string() : std::string(it->second);
}

struct Paragraph {
  std::string text;
  std::size_t link_chars = 0;
};

/// Appends raw text, decoding entities. Link characters are counted in code points.
void append_text(Paragraph& p, std::string_view raw, bool in_link) {
  std::string decoded;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '&') {
      const auto semi = raw.find(';', i);
      if (semi != std::string_view::npos && semi - i <= 10) {
        const auto value = decode_entity(raw.substr(i + 1, semi - i - 1));
        if (!value.empty()) {
          decoded += value;
          i = semi;
          continue;
        }
      }
    }
    decoded.push_back(raw[i]);
  }
  if (in_link) p.link_chars += unicode::code_point_count(decoded);
  p.text += decoded;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  unicode::for_each_code_point(s, [&](char32_t cp, std::size_t b, std::size_t e) {
    if (unicode::is_space(cp)) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.append(s.substr(b, e - b));
    }
  });
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

bool keep_paragraph(const Paragraph& p) {
  const auto text = collapse_spaces(p.text);
  if (text.empty()) return false;
  const auto chars = unicode::code_point_count(p.text);
  if (chars > 0 && static_cast<double>(p.link_chars) / static_cast<double>(chars) > kMaxLinkDensity) return false;
  std::size_t words = 0, stop = 0;
  for (const auto& w : tokenize_words(text)) {
    std::size_t pos = 0;
    if (!unicode::is_word_char(unicode::decode_at(w, pos))) continue;
    ++words;
    if (portuguese_stopwords().count(unicode::to_lower(w))) ++stop;
  }
  if (words >= kStopwordTestMinWords &&
      static_cast<double>(stop) / static_cast<double>(words) < kMinStopwordDensity)
    return false;
  return true;
}

/// Tag removal only, for markup the paragraph parser cannot follow.
std::string strip_tags(std::string_view html) {
  std::string out;
  bool in_tag = false;
  for (char c : html) {
    if (c == '<') in_tag = true;
    else if (c == '>' && in_tag) in_tag = false;
    else if (!in_tag) out.push_back(c);
  }
  return collapse_spaces(out);
}

}  // namespace

std::string strip_boilerplate(std::string_view html) {
  if (!looks_like_markup(html)) return std::string(html);

  std::vector<Paragraph> paragraphs(1);
  int link_depth = 0;
  std::size_t i = 0;
  while (i < html.size()) {
    const auto lt = html.find('<', i);
    append_text(paragraphs.back(), html.substr(i, lt == std::string_view::npos ? std::string_view::npos : lt - i),
                link_depth > 0);
    if (lt == std::string_view::npos) break;

    if (html.compare(lt, 4, "<!--") == 0) {
      const auto end = html.find("-->", lt + 4);
      if (end == std::string_view::npos) return strip_tags(html);
      i = end + 3;
      continue;
    }
    const auto gt = html.find('>', lt);
    if (gt == std::string_view::npos) return strip_tags(html);

    std::string_view tag = html.substr(lt + 1, gt - lt - 1);
    const bool closing = !tag.empty() && tag.front() == '/';
    if (closing) tag.remove_prefix(1);
    std::string name;
    for (char c : tag) {
      if (!std::isalnum(static_cast<unsigned char>(c))) break;
      name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    i = gt + 1;

    if (!closing && skipped_tags().count(name) && (tag.empty() || tag.back() != '/')) {
      const auto close = std::string("</") + name;
      std::size_t pos = i;
      while (true) {
        pos = html.find('<', pos);
        if (pos == std::string_view::npos) break;
        std::string candidate(html.substr(pos, close.size()));
        std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (candidate == close) break;
        ++pos;
      }
      if (pos == std::string_view::npos) {
        i = html.size();
        break;
      }
      const auto end = html.find('>', pos);
      i = end == std::string_view::npos ? html.size() : end + 1;
      paragraphs.emplace_back();
      continue;
    }
    if (name == "a") link_depth = closing ? std::max(0, link_depth - 1) : link_depth + 1;
    if (block_tags().count(name)) paragraphs.emplace_back();
  }

  std::string out;
  for (const auto& p : paragraphs) {
    if (!keep_paragraph(p)) continue;
    if (!out.empty()) out.push_back('\n');
    out += collapse_spaces(p.text);
  }
  return out;
}

// ---- IQR --------------------------------------------------------------------------

double linear_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::Data, "quantile of an empty sample");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

TukeyFence tukey_fence(std::span<const std::size_t> counts) {
  std::vector<double> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = linear_quantile(sorted, 0.25);
  const double q3 = linear_quantile(sorted, 0.75);
  const double iqr = q3 - q1;
  return {q1 - 1.5 * iqr, q3 + 1.5 * iqr};
}

namespace {

constexpr std::size_t kIqrMinGroup = 4;

}  // namespace

IqrResult iqr_filter(const Corpus& docs, const TokenCounter& counter) {
  std::vector<std::size_t> counts(docs.size());
  std::map<Domain, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    counts[i] = counter(docs[i].text);
    groups[docs[i].domain].push_back(i);
  }

  IqrResult r;
  std::vector<bool> keep(docs.size(), true);
  for (const auto& [domain, members] : groups) {
    if (members.size() < kIqrMinGroup) {
      r.passthrough.push_back(domain);
      continue;
    }
    std::vector<std::size_t> group_counts;
    group_counts.reserve(members.size());
    for (auto i : members) group_counts.push_back(counts[i]);
    const auto fence = tukey_fence(group_counts);
    for (auto i : members) keep[i] = fence.contains(static_cast<double>(counts[i]));
  }
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (keep[i]) r.docs.push_back(docs[i]);
    else ++r.dropped;
  }
  return r;
}

CleaningReport corpus_stats(const Corpus& docs, const TokenCounter& counter) {
  CleaningReport report;
  report.input_count = docs.size();
  report.output_count = docs.size();
  std::map<Domain, std::vector<std::size_t>> by_domain;
  std::map<std::pair<Domain, Label>, std::vector<std::size_t>> by_cell;
  for (const auto& d : docs) {
    const auto n = counter(d.text);
    by_domain[d.domain].push_back(n);
    by_cell[{d.domain, d.label}].push_back(n);
  }
  for (const auto& [domain, _] : by_domain) {
    by_cell.try_emplace({domain, Label::EP});
    by_cell.try_emplace({domain, Label::BP});
  }
  for (const auto& [d, c] : by_domain) report.per_domain[d] = token_stats(c);
  for (const auto& [cell, c] : by_cell) report.per_cell[cell] = token_stats(c);
  return report;
}

CleanResult clean_corpus(const Corpus& docs, const CleaningOptions& options, const TokenCounter& counter) {
  Corpus normalized;
  normalized.reserve(docs.size());
  for (const auto& doc : docs) {
    Document d = doc;
    if (options.strip_web_boilerplate && d.domain == Domain::Web) d.text = strip_boilerplate(d.text);
    d.text = normalize_text(d.text, options.keep_diacritics);
    normalized.push_back(std::move(d));
  }
  auto dropped = drop_invalid(normalized, options.keep_diacritics);

  CleanResult result;
  IqrResult filtered;
  if (options.iqr) {
    filtered = iqr_filter(dropped.docs, counter);
  } else {
    filtered.docs = std::move(dropped.docs);
  }
  result.docs = std::move(filtered.docs);
  result.report = corpus_stats(result.docs, counter);
  result.report.input_count = docs.size();
  result.report.output_count = result.docs.size();
  result.report.dropped_null_empty = dropped.dropped_null_empty;
  result.report.dropped_duplicates = dropped.dropped_duplicates;
  result.report.dropped_iqr = filtered.dropped;
  result.report.iqr_passthrough = std::move(filtered.passthrough);
  return result;
}

}  // namespace varid
