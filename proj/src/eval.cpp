#include "varid/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace varid {

// ---- classification metrics --------------------------------------------------------

ClassificationReport confusion_and_f1(std::span<const Label> preds, std::span<const Label> gold) {
  if (preds.size() != gold.size())
    throw Error(ErrorKind::Usage, "confusion_and_f1: " + std::to_string(preds.size()) + " predictions but " +
                                      std::to_string(gold.size()) + " gold labels");
  ClassificationReport r;
  r.count = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!is_variety(preds[i]) || !is_variety(gold[i]))
      throw Error(ErrorKind::Data, "confusion_and_f1: labels must be EP or BP");
    ++r.confusion[class_index(gold[i])][class_index(preds[i])];
  }
  std::size_t correct = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    const std::size_t tp = r.confusion[c][c];
    const std::size_t fn = r.confusion[c][1 - c];
    const std::size_t fp = r.confusion[1 - c][c];
    correct += tp;
    auto& m = r.per_class[c];
    m.support = tp + fn;
    m.absent_in_gold = m.support == 0;
    m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = m.support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(m.support);
    const std::size_t denom = 2 * tp + fp + fn;
    m.f1 = m.absent_in_gold || denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  r.macro_f1 = (r.per_class[0].f1 + r.per_class[1].f1) / 2.0;
  r.accuracy = r.count == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(r.count);
  return r;
}

ordered_json to_json(const ClassificationReport& r) {
  ordered_json j;
  j["count"] = r.count;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  ordered_json per = ordered_json::object();
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& m = r.per_class[c];
    ordered_json e;
    e["precision"] = m.precision;
    e["recall"] = m.recall;
    e["f1"] = m.f1;
    e["support"] = m.support;
    if (m.absent_in_gold) e["absent_in_gold"] = true;
    per[std::string(to_string(class_label(c)))] = std::move(e);
  }
  j["per_class"] = std::move(per);
  j["confusion"] = {{"gold_EP", {{"EP", r.confusion[0][0]}, {"BP", r.confusion[0][1]}}},
                    {"gold_BP", {{"EP", r.confusion[1][0]}, {"BP", r.confusion[1][1]}}}};
  return j;
}

// ---- annotations --------------------------------------------------------------------------

namespace {

std::optional<Label> parse_annotation_label(std::string_view s) {
  if (s == "EP") return Label::EP;
  if (s == "BP") return Label::BP;
  if (s == "Undetermined" || s == "U") return Label::Undetermined;
  return std::nullopt;
}

std::size_t category(Label l) {
  switch (l) {
    case Label::EP:
      return 0;
    case Label::BP:
      return 1;
    default:
      return 2;
  }
}

bool has_undetermined(const AnnotationItem& item) {
  return std::ranges::find(item.labels, Label::Undetermined) != item.labels.end();
}

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Rational make_rational(__int128 num, __int128 den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const __int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {num, den};
}

}  // namespace

void AnnotationMatrix::validate() const {
  if (annotator_count < 2) throw Error(ErrorKind::Data, "annotation matrix needs at least 2 annotators");
  for (const auto& item : items) {
    if (item.labels.size() != annotator_count)
      throw Error(ErrorKind::Data, "item \"" + item.id + "\" has " + std::to_string(item.labels.size()) +
                                       " annotations, expected " + std::to_string(annotator_count));
    for (auto l : item.labels)
      if (l == Label::Unlabeled) throw Error(ErrorKind::Data, "item \"" + item.id + "\" has an Unlabeled annotation");
    if (item.silver && !is_variety(*item.silver))
      throw Error(ErrorKind::Data, "item \"" + item.id + "\" has a silver label other than EP/BP");
  }
}

AnnotationMatrix parse_annotations(std::istream& in) {
  AnnotationMatrix m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(ErrorKind::Schema, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(ErrorKind::Schema, line_no, "expected a JSON object");
    AnnotationItem item;
    if (!obj.contains("id") || !obj["id"].is_string()) throw ParseError(ErrorKind::Schema, line_no, "missing \"id\"");
    item.id = obj["id"].get<std::string>();
    if (obj.contains("domain") && !obj["domain"].is_null()) {
      const auto d = parse_domain(obj["domain"].get<std::string>());
      if (!d) throw ParseError(ErrorKind::Schema, line_no, "unknown domain \"" + obj["domain"].get<std::string>() + "\"");
      item.domain = *d;
    }
    if (!obj.contains("annotations") || !obj["annotations"].is_array())
      throw ParseError(ErrorKind::Schema, line_no, "missing \"annotations\" array");
    for (const auto& a : obj["annotations"]) {
      const auto s = a.is_string() ? a.get<std::string>() : a.dump();
      const auto l = parse_annotation_label(s);
      if (!l) throw ParseError(ErrorKind::Schema, line_no, "unknown annotation label \"" + s + "\"");
      item.labels.push_back(*l);
    }
    if (obj.contains("silver") && !obj["silver"].is_null()) {
      const auto s = obj["silver"].get<std::string>();
      const auto l = parse_label(s);
      if (!l || !is_variety(*l)) throw ParseError(ErrorKind::Schema, line_no, "silver label must be EP or BP, got \"" + s + "\"");
      item.silver = *l;
    }
    if (m.items.empty()) m.annotator_count = item.labels.size();
    if (item.labels.size() != m.annotator_count)
      throw ParseError(ErrorKind::Data, line_no, "item \"" + item.id + "\" has " + std::to_string(item.labels.size()) +
                                                     " annotations, expected " + std::to_string(m.annotator_count));
    m.items.push_back(std::move(item));
  }
  m.validate();
  return m;
}

AnnotationMatrix load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_annotations(in);
}

Rational fleiss_kappa_exact(const AnnotationMatrix& m, bool exclude_undetermined) {
  m.validate();
  const auto n = static_cast<__int128>(m.annotator_count);
  __int128 items = 0;
  __int128 sum_sq = 0;
  std::array<__int128, 3> totals{};
  for (const auto& item : m.items) {
    if (exclude_undetermined && has_undetermined(item)) continue;
    std::array<__int128, 3> counts{};
    for (auto l : item.labels) ++counts[category(l)];
    for (std::size_t j = 0; j < 3; ++j) {
      sum_sq += counts[j] * counts[j];
      totals[j] += counts[j];
    }
    ++items;
  }
  if (items < 2) throw Error(ErrorKind::Data, "Fleiss' kappa needs at least 2 items, got " + std::to_string(static_cast<long long>(items)));

  // P = A / B, Pe = C / D, kappa = (A D - C B) / (B (D - C))
  const __int128 a = sum_sq - items * n;
  const __int128 b = items * n * (n - 1);
  __int128 c = 0;
  for (auto t : totals) c += t * t;
  const __int128 d = (items * n) * (items * n);
  if (c == d) {
    if (a == b) return {1, 1};
    throw Error(ErrorKind::Data, "Fleiss' kappa is undefined: all annotations fall in one category");
  }
  return make_rational(a * d - c * b, b * (d - c));
}

double fleiss_kappa(const AnnotationMatrix& m, bool exclude_undetermined) {
  return fleiss_kappa_exact(m, exclude_undetermined).value();
}

MajorityStats majority_and_accuracy(const AnnotationMatrix& m) {
  m.validate();
  MajorityStats s;
  s.items = m.items.size();
  std::size_t undetermined = 0;
  std::size_t silver_items = 0;
  std::size_t silver_correct = 0;
  for (const auto& item : m.items) {
    if (has_undetermined(item)) ++undetermined;
    std::array<std::size_t, 3> counts{};
    for (auto l : item.labels) ++counts[category(l)];
    const auto best = static_cast<std::size_t>(std::ranges::max_element(counts) - counts.begin());
    if (2 * counts[best] <= m.annotator_count) continue;
    ++s.majority_items;
    if (!item.silver) continue;
    ++silver_items;
    if (best == 2 || best == category(*item.silver)) ++silver_correct;
  }
  if (s.items > 0) {
    s.majority_rate = static_cast<double>(s.majority_items) / static_cast<double>(s.items);
    s.undetermined_rate = static_cast<double>(undetermined) / static_cast<double>(s.items);
  }
  if (silver_items > 0) s.silver_accuracy = static_cast<double>(silver_correct) / static_cast<double>(silver_items);
  return s;
}

namespace {

std::optional<double> kappa_or_none(const AnnotationMatrix& m, bool exclude) {
  try {
    return fleiss_kappa(m, exclude);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Data) throw;
    return std::nullopt;
  }
}

AgreementSummary summarize(const AnnotationMatrix& m) {
  AgreementSummary s;
  s.items = m.items.size();
  s.fleiss_kappa = kappa_or_none(m, false);
  s.fleiss_kappa_wo_undetermined = kappa_or_none(m, true);
  const auto maj = majority_and_accuracy(m);
  s.majority_rate = maj.majority_rate;
  s.silver_accuracy = maj.silver_accuracy;
  s.undetermined_rate = maj.undetermined_rate;
  return s;
}

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json summary_json(const AgreementSummary& s) {
  ordered_json j;
  j["items"] = s.items;
  j["fleiss_kappa"] = optional_json(s.fleiss_kappa);
  j["fleiss_kappa_wo_undetermined"] = optional_json(s.fleiss_kappa_wo_undetermined);
  j["majority_rate"] = s.majority_rate;
  j["silver_accuracy"] = optional_json(s.silver_accuracy);
  j["undetermined_rate"] = s.undetermined_rate;
  return j;
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

}  // namespace

AgreementReport agreement_report(const AnnotationMatrix& m) {
  m.validate();
  AgreementReport r;
  r.overall = summarize(m);
  std::map<Domain, AnnotationMatrix> by_domain;
  for (const auto& item : m.items) {
    auto& sub = by_domain[item.domain];
    sub.annotator_count = m.annotator_count;
    sub.items.push_back(item);
  }
  for (const auto& [d, sub] : by_domain) r.per_domain[d] = summarize(sub);
  return r;
}

ordered_json to_json(const AgreementReport& r) {
  ordered_json j = summary_json(r.overall);
  ordered_json per = ordered_json::object();
  for (const auto& [d, s] : r.per_domain) per[std::string(to_string(d))] = summary_json(s);
  j["per_domain"] = std::move(per);
  return j;
}

std::string format_agreement_table(const AgreementReport& r) {
  const std::vector<std::string> header = {"Domain", "Items", "Kappa", "Kappa w/o U", "Majority", "Accuracy", "Undetermined"};
  std::vector<std::vector<std::string>> rows;
  const auto add = [&](std::string name, const AgreementSummary& s) {
    rows.push_back({std::move(name), std::to_string(s.items), cell(s.fleiss_kappa), cell(s.fleiss_kappa_wo_undetermined),
                    cell(s.majority_rate), cell(s.silver_accuracy), cell(s.undetermined_rate)});
  };
  for (const auto& [d, s] : r.per_domain) add(std::string(to_string(d)), s);
  add("All", r.overall);

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  const auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      if (c == 0)
        out << row[c] << std::string(width[c] - row[c].size(), ' ');
      else
        out << std::string(width[c] - row[c].size(), ' ') << row[c];
    }
    out << '\n';
  };
  emit(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i + 1 == rows.size() && rows.size() > 1) out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    emit(rows[i]);
  }
  return out.str();
}

// ---- benchmarks -----------------------------------------------------------------------

std::optional<BenchmarkFormat> parse_benchmark_format(std::string_view s) {
  std::string lower;
  for (char c : s)
    if (c != '-' && c != '_') lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "dsltl") return BenchmarkFormat::DSLTL;
  if (lower == "frmt") return BenchmarkFormat::FRMT;
  if (lower == "jsonl") return BenchmarkFormat::JSONL;
  return std::nullopt;
}

namespace {

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.emplace_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string chomp(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

enum class DslLabel { EP, BP, Both };

std::optional<DslLabel> parse_dsl_label(std::string_view s) {
  std::string u;
  for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "PT-PT" || u == "PT_PT" || u == "EP") return DslLabel::EP;
  if (u == "PT-BR" || u == "PT_BR" || u == "BP") return DslLabel::BP;
  if (u == "PT" || u == "BOTH") return DslLabel::Both;
  return std::nullopt;
}

void count(Benchmark& b, Label l) { ++(l == Label::EP ? b.ep_count : b.bp_count); }

Benchmark ingest_dsltl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  Benchmark b;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = chomp(std::move(line));
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() < 2) throw ParseError(ErrorKind::Schema, line_no, "expected tab-separated text and label");
    const std::string label_str = fields.back();
    std::string id;
    std::string text;
    if (fields.size() == 2) {
      id = "dsltl-" + std::to_string(line_no);
      text = fields[0];
    } else {
      id = fields[0];
      for (std::size_t i = 1; i + 1 < fields.size(); ++i) {
        if (i > 1) text.push_back('\t');
        text += fields[i];
      }
    }
    const auto label = parse_dsl_label(label_str);
    if (!label) {
      std::string lower;
      for (char c : label_str) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      if (line_no == 1 && (lower == "label" || lower == "labels" || lower == "variety")) continue;
      throw ParseError(ErrorKind::Schema, line_no, "unknown label \"" + label_str + "\"");
    }
    if (*label == DslLabel::Both) {
      ++b.dropped_both;
      continue;
    }
    if (text.empty()) {
      ++b.dropped_empty;
      continue;
    }
    if (!seen.emplace(id, line_no).second) throw ParseError(ErrorKind::Data, line_no, "duplicate id \"" + id + "\"");
    Document d;
    d.id = std::move(id);
    d.text = std::move(text);
    d.label = *label == DslLabel::EP ? Label::EP : Label::BP;
    d.source = "dsl-tl";
    count(b, d.label);
    b.docs.push_back(std::move(d));
  }
  return b;
}

std::string bucket_of(const std::string& stem) {
  for (const char* name : {"entity", "lexical", "random"})
    if (stem.find(name) != std::string::npos) return name;
  return "other";
}

Benchmark ingest_frmt(const std::filesystem::path& root) {
  if (!std::filesystem::exists(root)) throw Error(ErrorKind::Io, "no such path " + root.string());
  struct Side {
    std::filesystem::path path;
    Label label;
    std::string stem;
  };
  std::vector<Side> files;
  const auto consider = [&](const std::filesystem::path& p) {
    const auto name = p.filename().string();
    for (const auto& [suffix, label] : {std::pair{std::string("_pt-PT.tsv"), Label::EP},
                                        std::pair{std::string("_pt-BR.tsv"), Label::BP}}) {
      if (name.size() > suffix.size() && name.ends_with(suffix)) {
        const auto rel = std::filesystem::is_directory(root) ? std::filesystem::relative(p, root) : p.filename();
        auto stem = rel.string();
        stem.resize(stem.size() - suffix.size());
        files.push_back({p, label, stem});
      }
    }
  };
  if (std::filesystem::is_directory(root)) {
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
      if (e.is_regular_file()) consider(e.path());
  } else {
    consider(root);
  }
  if (files.empty()) throw Error(ErrorKind::Data, "no *_pt-PT.tsv or *_pt-BR.tsv files under " + root.string());
  std::ranges::sort(files, [](const Side& a, const Side& b) {
    return std::tie(a.stem, a.label) < std::tie(b.stem, b.label);
  });

  Benchmark b;
  // (stem, source sentence, occurrence) -> [EP id, BP id]
  std::map<std::tuple<std::string, std::string, std::size_t>, std::array<std::string, 2>> pairing;
  for (const auto& f : files) {
    std::ifstream in(f.path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + f.path.string());
    const std::string region = f.label == Label::EP ? "pt-PT" : "pt-BR";
    std::map<std::string, std::size_t> occurrences;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      line = chomp(std::move(line));
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw ParseError(ErrorKind::Schema, line_no, f.path.filename().string() + ": expected source<TAB>translation");
      std::string source = line.substr(0, tab);
      std::string text = line.substr(tab + 1);
      const auto occurrence = occurrences[source]++;
      if (text.empty()) {
        ++b.dropped_empty;
        continue;
      }
      Document d;
      d.id = f.stem + ":" + region + ":" + std::to_string(line_no);
      d.text = std::move(text);
      d.label = f.label;
      d.source = "frmt/" + bucket_of(f.stem);
      pairing[{f.stem, std::move(source), occurrence}][class_index(f.label)] = d.id;
      count(b, d.label);
      b.docs.push_back(std::move(d));
    }
  }
  for (const auto& [key, ids] : pairing) {
    if (ids[0].empty() || ids[1].empty()) {
      ++b.unpaired;
      continue;
    }
    const auto& stem = std::get<0>(key);
    b.pairs.push_back({stem + "#" + std::to_string(b.pairs.size()), bucket_of(stem), ids[0], ids[1]});
  }
  return b;
}

Benchmark ingest_jsonl(const std::filesystem::path& path) {
  Benchmark b;
  for (auto& d : read_jsonl(path)) {
    if (d.label == Label::Undetermined) {
      ++b.dropped_both;
      continue;
    }
    if (!is_variety(d.label)) throw Error(ErrorKind::Data, "benchmark document \"" + d.id + "\" has no EP/BP label");
    count(b, d.label);
    b.docs.push_back(std::move(d));
  }
  return b;
}

}  // namespace

Benchmark ingest_benchmark(const std::filesystem::path& path, BenchmarkFormat format) {
  switch (format) {
    case BenchmarkFormat::DSLTL:
      return ingest_dsltl(path);
    case BenchmarkFormat::FRMT:
      return ingest_frmt(path);
    case BenchmarkFormat::JSONL:
      break;
  }
  return ingest_jsonl(path);
}

ordered_json benchmark_report(const Benchmark& b) {
  ordered_json j;
  j["documents"] = b.docs.size();
  j["EP"] = b.ep_count;
  j["BP"] = b.bp_count;
  j["dropped_both"] = b.dropped_both;
  j["dropped_empty"] = b.dropped_empty;
  j["pairs"] = b.pairs.size();
  j["unpaired"] = b.unpaired;
  return j;
}

PairedAnalysis paired_bucket_analysis(const std::unordered_map<std::string, Label>& preds,
                                      std::span<const DocPair> pairs) {
  PairedAnalysis a;
  std::map<std::string, std::pair<std::vector<Label>, std::vector<Label>>> bucket_labels;  // preds, gold
  for (const auto& p : pairs) {
    const auto ep = preds.find(p.ep_id);
    const auto bp = preds.find(p.bp_id);
    if (ep == preds.end() || bp == preds.end())
      throw Error(ErrorKind::Data, "pair \"" + p.pair_id + "\" has no prediction for \"" +
                                       (ep == preds.end() ? p.ep_id : p.bp_id) + "\"");
    const bool same = ep->second == bp->second;
    ++a.pairs;
    auto& bs = a.per_bucket[p.bucket];
    ++bs.pairs;
    if (same) {
      ++a.same_label;
      ++bs.same_label;
    }
    auto& [pl, gl] = bucket_labels[p.bucket];
    pl.push_back(ep->second);
    gl.push_back(Label::EP);
    pl.push_back(bp->second);
    gl.push_back(Label::BP);
  }
  if (a.pairs > 0) a.same_label_pair_rate = static_cast<double>(a.same_label) / static_cast<double>(a.pairs);
  for (auto& [bucket, bs] : a.per_bucket) {
    bs.same_label_rate = static_cast<double>(bs.same_label) / static_cast<double>(bs.pairs);
    const auto& [pl, gl] = bucket_labels[bucket];
    bs.metrics = confusion_and_f1(pl, gl);
  }
  return a;
}

ordered_json to_json(const PairedAnalysis& a) {
  ordered_json j;
  j["pairs"] = a.pairs;
  j["same_label"] = a.same_label;
  j["same_label_pair_rate"] = a.same_label_pair_rate;
  ordered_json per = ordered_json::object();
  for (const auto& [bucket, bs] : a.per_bucket) {
    ordered_json e;
    e["pairs"] = bs.pairs;
    e["same_label_rate"] = bs.same_label_rate;
    e["macro_f1"] = bs.metrics.macro_f1;
    e["metrics"] = to_json(bs.metrics);
    per[bucket] = std::move(e);
  }
  j["per_bucket"] = std::move(per);
  return j;
}

}  // namespace varid
