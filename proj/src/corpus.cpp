#include "varid/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "varid/hash.hpp"
#include "varid/json_util.hpp"
#include "varid/rng.hpp"

namespace varid {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string required_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(ErrorKind::Schema, line, std::string("missing \"") + key + "\"");
  if (!it->is_string()) throw ParseError(ErrorKind::Schema, line, std::string("\"") + key + "\" must be a string");
  return it->get<std::string>();
}

}  // namespace

Corpus parse_jsonl(std::istream& in) {
  Corpus docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(ErrorKind::Schema, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(ErrorKind::Schema, line_no, "expected a JSON object");

    Document doc;
    doc.id = required_string(obj, "id", line_no);
    doc.text = required_string(obj, "text", line_no);
    if (doc.id.empty()) throw ParseError(ErrorKind::Schema, line_no, "empty id");
    if (auto it = obj.find("domain"); it != obj.end() && !it->is_null()) {
      const auto name = it->is_string() ? it->get<std::string>() : std::string();
      const auto d = parse_domain(name);
      if (!d) throw ParseError(ErrorKind::Schema, line_no, "unknown domain \"" + name + "\"");
      doc.domain = *d;
    }
    if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
      const auto name = it->is_string() ? it->get<std::string>() : std::string();
      const auto l = parse_label(name);
      if (!l) throw ParseError(ErrorKind::Schema, line_no, "unknown label \"" + name + "\"");
      doc.label = *l;
    }
    if (auto it = obj.find("source"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw ParseError(ErrorKind::Schema, line_no, "\"source\" must be a string");
      doc.source = it->get<std::string>();
    }
    if (!seen.insert(doc.id).second)
      throw ParseError(ErrorKind::Data, line_no, "duplicate id \"" + doc.id + "\"");
    docs.push_back(std::move(doc));
  }
  return docs;
}

Corpus read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return parse_jsonl(in);
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.line(), path.string() + ": " + e.detail());
  }
}

std::string to_jsonl_line(const Document& doc) {
  ordered_json obj;
  obj["id"] = doc.id;
  obj["text"] = doc.text;
  obj["domain"] = std::string(to_string(doc.domain));
  obj["label"] = std::string(to_string(doc.label));
  if (doc.source) obj["source"] = *doc.source;
  return obj.dump();
}

void write_jsonl(std::ostream& out, const Corpus& docs) {
  for (const auto& d : docs) out << to_jsonl_line(d) << '\n';
}

void write_jsonl(const std::filesystem::path& path, const Corpus& docs) {
  std::ostringstream ss;
  write_jsonl(ss, docs);
  write_file_atomic(path, ss.str());
}

std::string corpus_fingerprint(const Corpus& docs) {
  Sha256 h;
  for (const auto& d : docs) {
    h.update_field(d.id);
    h.update_field(d.text);
    h.update_field(to_string(d.domain));
    h.update_field(to_string(d.label));
  }
  return h.hex_digest();
}

// ---- silver labeling ---------------------------------------------------------

std::string source_host(std::string_view source) {
  std::string_view s = source;
  if (const auto scheme = s.find("://"); scheme != std::string_view::npos) s.remove_prefix(scheme + 3);
  if (const auto end = s.find_first_of("/?#"); end != std::string_view::npos) s = s.substr(0, end);
  if (const auto at = s.rfind('@'); at != std::string_view::npos) s.remove_prefix(at + 1);
  if (const auto colon = s.rfind(':'); colon != std::string_view::npos) s = s.substr(0, colon);
  while (!s.empty() && s.back() == '.') s.remove_suffix(1);
  std::string host(s);
  std::transform(host.begin(), host.end(), host.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return host;
}

bool rule_matches(const LabelRule& rule, const std::optional<std::string>& source) {
  if (!source) return false;
  switch (rule.kind) {
    case MatcherKind::SourceEquals:
      return *source == rule.pattern;
    case MatcherKind::SourceSuffix:
      return source->size() >= rule.pattern.size() &&
             source->compare(source->size() - rule.pattern.size(), rule.pattern.size(), rule.pattern) == 0;
    case MatcherKind::Tld: {
      const auto host = source_host(*source);
      std::string tld = source_host(rule.pattern);
      if (!tld.empty() && tld.front() != '.') tld.insert(tld.begin(), '.');
      return host.size() > tld.size() && host.compare(host.size() - tld.size(), tld.size(), tld) == 0;
    }
  }
  return false;
}

Document silver_label(Document doc, const LabelRuleSet& rules) {
  if (doc.label != Label::Unlabeled) return doc;
  for (const auto& rule : rules.rules) {
    if (rule_matches(rule, doc.source)) {
      doc.label = rule.label;
      return doc;
    }
  }
  doc.label = rules.default_label;
  return doc;
}

LabelRuleSet parse_label_rules(std::istream& in) {
  LabelRuleSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(ErrorKind::Schema, line_no, "expected key = value");
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));

    auto parse_rule_label = [&](const std::string& name) {
      const auto l = parse_label(name);
      if (!l) throw ParseError(ErrorKind::Schema, line_no, "unknown label \"" + name + "\"");
      return *l;
    };

    if (key == "default") {
      set.default_label = parse_rule_label(value);
      continue;
    }
    MatcherKind kind;
    if (key == "source-equals") kind = MatcherKind::SourceEquals;
    else if (key == "source-suffix") kind = MatcherKind::SourceSuffix;
    else if (key == "tld") kind = MatcherKind::Tld;
    else throw ParseError(ErrorKind::Schema, line_no, "unknown matcher \"" + key + "\"");

    const auto arrow = value.rfind("=>");
    if (arrow == std::string::npos) throw ParseError(ErrorKind::Schema, line_no, "expected `pattern => LABEL`");
    const auto pattern = trim(std::string_view(value).substr(0, arrow));
    if (pattern.empty()) throw ParseError(ErrorKind::Schema, line_no, "empty pattern");
    set.rules.push_back({kind, pattern, parse_rule_label(trim(std::string_view(value).substr(arrow + 2)))});
  }
  return set;
}

LabelRuleSet load_label_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_label_rules(in);
}

// ---- protocol splits ---------------------------------------------------------

namespace {

std::string cell_name(Domain d, Label l) {
  return "(" + std::string(to_string(d)) + ", " + std::string(to_string(l)) + ")";
}

/// Corpus indices per (domain, label) cell, EP/BP only, in corpus order.
std::map<Domain, std::array<std::vector<std::size_t>, 2>> index_cells(const Corpus& corpus) {
  std::map<Domain, std::array<std::vector<std::size_t>, 2>> cells;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& doc = corpus[i];
    if (doc.label == Label::Undetermined) continue;
    if (!is_variety(doc.label))
      throw Error(ErrorKind::Data, "document \"" + doc.id + "\" is not labeled EP or BP");
    if (doc.domain == Domain::Unknown)
      throw Error(ErrorKind::Data, "document \"" + doc.id + "\" has Unknown domain");
    cells[doc.domain][class_index(doc.label)].push_back(i);
  }
  return cells;
}

Corpus gather(const Corpus& corpus, std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  Corpus out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(corpus[i]);
  return out;
}

}  // namespace

std::vector<Domain> ProtocolSplits::domains() const {
  std::vector<Domain> out;
  for (const auto& [d, _] : train) out.push_back(d);
  return out;
}

ProtocolSplits build_protocol_splits(const Corpus& corpus, const SplitOptions& options) {
  if (options.train_per_domain % 2 != 0 || options.val_per_domain % 2 != 0)
    throw Error(ErrorKind::Usage, "per-domain split sizes must be even (half per label)");
  const std::size_t want_train = options.train_per_domain / 2;
  const std::size_t want_val = options.val_per_domain / 2;

  ProtocolSplits splits;
  splits.seed = options.seed;
  for (const auto& [domain, by_label] : index_cells(corpus)) {
    for (std::size_t c = 0; c < 2; ++c)
      if (by_label[c].empty())
        throw Error(ErrorKind::Data, "domain " + std::string(to_string(domain)) + " has no " +
                                         std::string(to_string(class_label(c))) + " documents");
    const std::size_t available = std::min(by_label[0].size(), by_label[1].size());
    std::size_t n_train = want_train;
    std::size_t n_val = want_val;
    if (available < want_train + want_val) {
      if (!options.allow_shrink) {
        const std::size_t c = by_label[0].size() < by_label[1].size() ? 0 : 1;
        throw Error(ErrorKind::Data, "cell " + cell_name(domain, class_label(c)) + " has " +
                                         std::to_string(available) + " documents, needs " +
                                         std::to_string(want_train + want_val));
      }
      n_val = want_val * available / (want_train + want_val);
      n_train = std::min(want_train, available - n_val);
    }

    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t c = 0; c < 2; ++c) {
      const Label label = class_label(c);
      SplitMix64 rng(options.seed, "split/" + std::string(to_string(domain)) + "/" + std::string(to_string(label)));
      const auto picks = sample_indices(by_label[c].size(), n_val + n_train, rng);
      for (std::size_t k = 0; k < picks.size(); ++k)
        (k < n_val ? val_idx : train_idx).push_back(by_label[c][picks[k]]);
    }
    splits.train[domain] = gather(corpus, std::move(train_idx));
    splits.val[domain] = gather(corpus, std::move(val_idx));
  }
  return splits;
}

Corpus undersample_balanced(const Corpus& corpus, std::uint64_t seed) {
  const auto cells = index_cells(corpus);
  if (cells.empty()) throw Error(ErrorKind::Data, "no EP/BP documents to undersample");
  std::size_t m = corpus.size();
  for (const auto& [domain, by_label] : cells)
    for (std::size_t c = 0; c < 2; ++c) {
      if (by_label[c].empty()) throw Error(ErrorKind::Data, "empty cell " + cell_name(domain, class_label(c)));
      m = std::min(m, by_label[c].size());
    }

  std::vector<std::size_t> keep;
  for (const auto& [domain, by_label] : cells)
    for (std::size_t c = 0; c < 2; ++c) {
      SplitMix64 rng(seed, "undersample/" + std::string(to_string(domain)) + "/" +
                               std::string(to_string(class_label(c))));
      for (auto k : sample_indices(by_label[c].size(), m, rng)) keep.push_back(by_label[c][k]);
    }
  return gather(corpus, std::move(keep));
}

void write_splits(const std::filesystem::path& dir, const ProtocolSplits& splits) {
  std::filesystem::create_directories(dir);
  ordered_json manifest;
  manifest["seed"] = splits.seed;
  manifest["domains"] = ordered_json::array();
  for (const auto& [domain, docs] : splits.train) {
    const std::string name(to_string(domain));
    manifest["domains"].push_back(name);
    write_jsonl(dir / ("train_" + name + ".jsonl"), docs);
    const auto v = splits.val.find(domain);
    write_jsonl(dir / ("val_" + name + ".jsonl"), v == splits.val.end() ? Corpus{} : v->second);
  }
  write_file_atomic(dir / "splits.json", manifest.dump() + "\n");
}

ProtocolSplits read_splits(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "splits.json";
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, manifest_path.string() + ": " + e.what());
  }
  ProtocolSplits splits;
  splits.seed = manifest.value("seed", std::uint64_t{0});
  for (const auto& name : manifest.at("domains")) {
    const auto d = parse_domain(name.get<std::string>());
    if (!d) throw Error(ErrorKind::Schema, "unknown domain in " + manifest_path.string());
    splits.train[*d] = read_jsonl(dir / ("train_" + name.get<std::string>() + ".jsonl"));
    splits.val[*d] = read_jsonl(dir / ("val_" + name.get<std::string>() + ".jsonl"));
  }
  return splits;
}

}  // namespace varid
