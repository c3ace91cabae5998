#include "varid/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace varid {

// ---- points and grids -----------------------------------------------------------------

ordered_json to_json(const SweepPoint& p) {
  ordered_json j;
  j["p_pos"] = p.p_pos;
  j["p_ner"] = p.p_ner;
  j["features"] = to_json(p.features);
  j["alpha"] = p.alpha;
  return j;
}

SweepPoint sweep_point_from_json(const ordered_json& j) {
  SweepPoint p;
  p.p_pos = j.at("p_pos").get<double>();
  p.p_ner = j.at("p_ner").get<double>();
  p.features = feature_config_from_json(j.at("features"));
  p.alpha = j.at("alpha").get<double>();
  return p;
}

std::vector<SweepPoint> SweepGrid::points() const {
  std::vector<SweepPoint> out;
  out.reserve(size());
  for (double pp : p_pos)
    for (double pn : p_ner)
      for (auto an : analyzer)
        for (const auto& [lo, hi] : ngram_range)
          for (auto mf : max_features)
            for (bool lc : lowercase)
              for (double a : alpha) {
                SweepPoint p;
                p.p_pos = pp;
                p.p_ner = pn;
                p.features = {an, lo, hi, mf, lc};
                p.alpha = a;
                out.push_back(p);
              }
  return out;
}

std::size_t SweepGrid::size() const {
  return p_pos.size() * p_ner.size() * analyzer.size() * ngram_range.size() * max_features.size() *
         lowercase.size() * alpha.size();
}

namespace {

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// TOML arrays of numbers, strings and booleans are JSON once trailing commas go.
nlohmann::json parse_value(std::string text, std::size_t line) {
  std::string cleaned;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == ',') {
      auto j = text.find_first_not_of(" \t\r\n", i + 1);
      if (j != std::string::npos && text[j] == ']') continue;
    }
    cleaned.push_back(text[i]);
  }
  try {
    auto v = nlohmann::json::parse(cleaned);
    return v.is_array() ? v : nlohmann::json::array({v});
  } catch (const nlohmann::json::parse_error&) {
    throw ParseError(ErrorKind::Schema, line, "cannot parse value " + text);
  }
}

template <typename T, typename Fn>
std::vector<T> convert(const nlohmann::json& values, std::size_t line, const std::string& key, Fn&& fn) {
  std::vector<T> out;
  for (const auto& v : values) {
    try {
      out.push_back(fn(v));
    } catch (const nlohmann::json::exception&) {
      throw ParseError(ErrorKind::Schema, line, "bad value " + v.dump() + " for " + key);
    }
  }
  if (out.empty()) throw ParseError(ErrorKind::Schema, line, key + " must list at least one value");
  return out;
}

double probability(const nlohmann::json& v, std::size_t line) {
  const double p = v.get<double>();
  if (!(p >= 0.0 && p <= 1.0)) throw ParseError(ErrorKind::Schema, line, "probability " + v.dump() + " outside [0, 1]");
  return p;
}

}  // namespace

SweepGrid parse_grid(std::istream& in) {
  SweepGrid g;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty() || line.front() == '[') continue;  // blank or table header
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(ErrorKind::Schema, line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    const std::size_t start_line = line_no;
    // multi-line arrays
    auto depth = [](const std::string& s) {
      int d = 0;
      for (char c : s) d += c == '[' ? 1 : c == ']' ? -1 : 0;
      return d;
    };
    while (depth(value) > 0 && std::getline(in, raw)) {
      ++line_no;
      value += " " + trim(strip_comment(raw));
    }
    if (!seen.insert(key).second) throw ParseError(ErrorKind::Schema, start_line, "duplicate key " + key);
    const auto v = parse_value(value, start_line);
    if (key == "p_pos") {
      g.p_pos = convert<double>(v, start_line, key, [&](const auto& x) { return probability(x, start_line); });
    } else if (key == "p_ner") {
      g.p_ner = convert<double>(v, start_line, key, [&](const auto& x) { return probability(x, start_line); });
    } else if (key == "analyzer") {
      g.analyzer = convert<Analyzer>(v, start_line, key, [&](const auto& x) {
        const auto a = parse_analyzer(x.template get<std::string>());
        if (!a) throw ParseError(ErrorKind::Schema, start_line, "unknown analyzer " + x.dump());
        return *a;
      });
    } else if (key == "ngram_range") {
      g.ngram_range = convert<std::pair<int, int>>(v, start_line, key, [&](const auto& x) {
        if (!x.is_array() || x.size() != 2)
          throw ParseError(ErrorKind::Schema, start_line, "ngram_range entries are [lo, hi] pairs");
        FeatureConfig c;
        c.ngram_lo = x[0].template get<int>();
        c.ngram_hi = x[1].template get<int>();
        c.validate();
        return std::pair{c.ngram_lo, c.ngram_hi};
      });
    } else if (key == "max_features") {
      g.max_features = convert<std::size_t>(v, start_line, key, [&](const auto& x) {
        const auto n = x.template get<long long>();
        if (n <= 0) throw ParseError(ErrorKind::Schema, start_line, "max_features must be positive");
        return static_cast<std::size_t>(n);
      });
    } else if (key == "lowercase") {
      g.lowercase = convert<bool>(v, start_line, key, [](const auto& x) { return x.template get<bool>(); });
    } else if (key == "alpha") {
      g.alpha = convert<double>(v, start_line, key, [&](const auto& x) {
        const double a = x.template get<double>();
        if (!(a > 0.0)) throw ParseError(ErrorKind::Schema, start_line, "alpha must be positive");
        return a;
      });
    } else {
      throw ParseError(ErrorKind::Schema, start_line, "unknown grid key " + key);
    }
  }
  return g;
}

SweepGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_grid(in);
}

SweepGrid full_grid() {
  SweepGrid g;
  g.p_pos = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  g.p_ner = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  g.analyzer = {Analyzer::Word, Analyzer::Char};
  g.ngram_range = {{1, 1}, {1, 2}, {1, 3}, {1, 4}, {1, 5}, {1, 10}};
  g.max_features = {100, 500, 1000, 5000, 10000, 50000, 100000};
  g.lowercase = {true, false};
  g.alpha = {1.0};
  return g;
}

ordered_json to_json(const SweepGrid& g) {
  ordered_json j;
  j["p_pos"] = g.p_pos;
  j["p_ner"] = g.p_ner;
  j["analyzer"] = ordered_json::array();
  for (auto a : g.analyzer) j["analyzer"].push_back(std::string(to_string(a)));
  j["ngram_range"] = ordered_json::array();
  for (const auto& [lo, hi] : g.ngram_range) j["ngram_range"].push_back({lo, hi});
  j["max_features"] = g.max_features;
  j["lowercase"] = ordered_json::array();
  for (bool b : g.lowercase) j["lowercase"].push_back(b);
  j["alpha"] = g.alpha;
  return j;
}

// ---- records ----------------------------------------------------------------------------

ordered_json to_json(const SweepRecord& r) {
  ordered_json j;
  j["point"] = to_json(r.point);
  j["train_domain"] = std::string(to_string(r.train_domain));
  ordered_json per = ordered_json::object();
  for (const auto& [d, f1] : r.per_heldout_f1) per[std::string(to_string(d))] = f1;
  j["per_heldout_f1"] = std::move(per);
  j["mean_f1"] = r.mean_f1;
  return j;
}

SweepRecord sweep_record_from_json(const ordered_json& j) {
  SweepRecord r;
  r.point = sweep_point_from_json(j.at("point"));
  const auto d = parse_domain(j.at("train_domain").get<std::string>());
  if (!d) throw Error(ErrorKind::Schema, "sweep record: unknown train_domain");
  r.train_domain = *d;
  for (const auto& [name, f1] : j.at("per_heldout_f1").items()) {
    const auto hd = parse_domain(name);
    if (!hd) throw Error(ErrorKind::Schema, "sweep record: unknown domain " + name);
    r.per_heldout_f1[*hd] = f1.get<double>();
  }
  r.mean_f1 = j.at("mean_f1").get<double>();
  return r;
}

std::vector<SweepRecord> read_sweep_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<SweepRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(sweep_record_from_json(ordered_json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(ErrorKind::Schema, line_no, std::string("bad sweep record: ") + e.what());
    }
  }
  return out;
}

namespace {

std::string render_log(const std::vector<const SweepRecord*>& records) {
  std::string out;
  for (const auto* r : records) {
    out += dump_canonical(to_json(*r));
    out.push_back('\n');
  }
  return out;
}

std::string record_key(const SweepPoint& p, Domain train_domain) {
  return dump_canonical(to_json(p)) + "|" + std::string(to_string(train_domain));
}

const TagProvider& tagger_or_default(const TagProvider* t) {
  static const LexiconTagProvider fallback(default_lexicon());
  return t ? *t : fallback;
}

Label checked_label(const Document& d) {
  if (!is_variety(d.label)) throw Error(ErrorKind::Data, "document \"" + d.id + "\" is not labeled EP or BP");
  return d.label;
}

}  // namespace

void write_sweep_log(const std::vector<SweepRecord>& records, const std::filesystem::path& path) {
  std::vector<const SweepRecord*> ptrs;
  for (const auto& r : records) ptrs.push_back(&r);
  write_file_atomic(path, render_log(ptrs));
}

// ---- step 1 ----------------------------------------------------------------------------------

std::vector<SweepRecord> run_step1(const ProtocolSplits& splits, std::span<const SweepPoint> grid, Domain train_domain,
                                   const Step1Options& options) {
  if (grid.empty()) throw Error(ErrorKind::Usage, "sweep grid is empty");
  const auto train_it = splits.train.find(train_domain);
  if (train_it == splits.train.end() || train_it->second.empty())
    throw Error(ErrorKind::Protocol, "no training split for domain " + std::string(to_string(train_domain)));

  std::vector<Domain> heldout;
  if (options.heldout) {
    heldout = *options.heldout;
  } else {
    for (const auto& [d, docs] : splits.val)
      if (d != train_domain) heldout.push_back(d);
  }
  for (auto d : heldout) {
    if (d == train_domain)
      throw Error(ErrorKind::Protocol, "protocol violation: evaluation on the training domain " +
                                           std::string(to_string(train_domain)) + " was requested");
    if (!splits.val.contains(d))
      throw Error(ErrorKind::Protocol, "no validation split for held-out domain " + std::string(to_string(d)));
  }
  if (heldout.empty()) throw Error(ErrorKind::Protocol, "no held-out domains to validate on");

  const Corpus& train_docs = train_it->second;
  const TagProvider& tagger = tagger_or_default(options.tagger);
  std::vector<TaggedDocument> train_tags;
  std::vector<Label> train_labels;
  train_tags.reserve(train_docs.size());
  for (const auto& d : train_docs) {
    train_tags.push_back(tagger.tags(d));
    train_labels.push_back(checked_label(d));
  }

  struct Heldout {
    Domain domain;
    const Corpus* docs;
    std::vector<std::string_view> texts;
    std::vector<Label> gold;
  };
  std::vector<Heldout> eval_sets;
  for (auto d : heldout) {
    Heldout h{d, &splits.val.at(d), {}, {}};
    for (const auto& doc : *h.docs) {
      h.texts.emplace_back(doc.text);
      h.gold.push_back(checked_label(doc));
    }
    eval_sets.push_back(std::move(h));
  }

  // Records of other runs sharing the log are kept ahead of this run's.
  std::vector<std::optional<SweepRecord>> results(grid.size());
  std::vector<SweepRecord> preserved;
  if (options.log_path && std::filesystem::exists(*options.log_path)) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < grid.size(); ++i) index.emplace(record_key(grid[i], train_domain), i);
    for (auto& r : read_sweep_log(*options.log_path)) {
      const auto it = index.find(record_key(r.point, r.train_domain));
      if (it == index.end())
        preserved.push_back(std::move(r));
      else
        results[it->second] = std::move(r);
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!results[i]) pending.push_back(i);

  // Delexicalized training texts depend only on (p_pos, p_ner).
  std::mutex cache_mutex;
  std::map<std::pair<double, double>, std::shared_ptr<const std::vector<std::string>>> delex_cache;
  const auto train_texts = [&](const SweepPoint& p) {
    const std::pair key{p.p_pos, p.p_ner};
    {
      std::lock_guard lock(cache_mutex);
      if (const auto it = delex_cache.find(key); it != delex_cache.end()) return it->second;
    }
    DelexPolicy policy{p.p_pos, p.p_ner, options.pos_maskable, options.delex_seed};
    policy.validate();
    auto texts = std::make_shared<std::vector<std::string>>();
    texts->reserve(train_docs.size());
    for (std::size_t i = 0; i < train_docs.size(); ++i)
      texts->push_back(delexicalize(train_docs[i].text, train_tags[i], policy, train_docs[i].id));
    std::lock_guard lock(cache_mutex);
    return delex_cache.emplace(key, std::move(texts)).first->second;
  };

  std::mutex out_mutex;
  auto last_write = std::chrono::steady_clock::time_point{};
  const auto checkpoint = [&](bool force) {
    if (!options.log_path) return;
    const auto now = std::chrono::steady_clock::now();
    if (!force && now - last_write < std::chrono::seconds(1)) return;
    last_write = now;
    std::vector<const SweepRecord*> ptrs;
    for (const auto& r : preserved) ptrs.push_back(&r);
    for (const auto& r : results)
      if (r) ptrs.push_back(&*r);
    write_file_atomic(*options.log_path, render_log(ptrs));
  };

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;

  const auto job = [&](std::size_t grid_index) {
    const SweepPoint& point = grid[grid_index];
    const auto texts = train_texts(point);
    DelexPolicy policy{point.p_pos, point.p_ner, options.pos_maskable, options.delex_seed};
    const auto model = train_model(*texts, train_labels, point.features, point.alpha, policy);

    SweepRecord record;
    record.point = point;
    record.train_domain = train_domain;
    double sum = 0.0;
    for (const auto& h : eval_sets) {
      if (h.domain == train_domain) throw Error(ErrorKind::Protocol, "protocol violation: scoring the training domain");
      if (options.observer) {
        std::lock_guard lock(out_mutex);
        options.observer(EvaluationEvent{point, train_domain, h.domain, *h.docs, h.texts});
      }
      std::vector<Label> preds;
      preds.reserve(h.texts.size());
      for (auto t : h.texts) preds.push_back(model.predict_text(t).label);
      const double f1 = confusion_and_f1(preds, h.gold).macro_f1;
      record.per_heldout_f1[h.domain] = f1;
      sum += f1;
    }
    record.mean_f1 = sum / static_cast<double>(eval_sets.size());

    std::lock_guard lock(out_mutex);
    results[grid_index] = record;
    if (options.on_record) options.on_record(record);
    checkpoint(false);
  };

  const auto worker = [&] {
    while (!failed.load()) {
      const auto k = next.fetch_add(1);
      if (k >= pending.size()) return;
      try {
        job(pending[k]);
      } catch (...) {
        std::lock_guard lock(out_mutex);
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(options.workers, pending.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  {
    std::lock_guard lock(out_mutex);
    checkpoint(true);
  }
  if (error) std::rethrow_exception(error);

  std::vector<SweepRecord> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

// ---- aggregation and selection -------------------------------------------------------

std::map<std::pair<double, double>, double> aggregate_delex_surface(std::span<const SweepRecord> records,
                                                                   SurfaceMode mode) {
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<std::pair<double, double>, Acc> marginal;
  std::map<std::pair<double, double>, std::map<std::string, Acc>> per_config;
  for (const auto& r : records) {
    const std::pair key{r.point.p_pos, r.point.p_ner};
    auto& m = marginal[key];
    m.sum += r.mean_f1;
    ++m.n;
    const auto cfg = dump_canonical(to_json(r.point.features)) + "|" + format_double(r.point.alpha);
    auto& c = per_config[key][cfg];
    c.sum += r.mean_f1;
    ++c.n;
  }
  std::map<std::pair<double, double>, double> surface;
  for (const auto& [key, acc] : marginal) {
    if (mode == SurfaceMode::MarginalMean) {
      surface[key] = acc.sum / static_cast<double>(acc.n);
      continue;
    }
    double best = -1.0;
    for (const auto& [cfg, c] : per_config[key]) best = std::max(best, c.sum / static_cast<double>(c.n));
    surface[key] = best;
  }
  return surface;
}

SweepPoint select_best(std::span<const SweepRecord> records) {
  if (records.empty()) throw Error(ErrorKind::Usage, "select_best: no sweep records");
  struct Acc {
    SweepPoint point;
    double sum = 0.0;
    std::size_t n = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Acc> by_point;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = by_point.try_emplace(dump_canonical(to_json(records[i].point)));
    if (inserted) {
      it->second.point = records[i].point;
      it->second.first = i;
    }
    it->second.sum += records[i].mean_f1;
    ++it->second.n;
  }
  const Acc* best = nullptr;
  double best_score = 0.0;
  const auto better = [](const Acc& a, double sa, const Acc& b, double sb) {
    if (sa != sb) return sa > sb;
    const auto& fa = a.point.features;
    const auto& fb = b.point.features;
    if (fa.max_features != fb.max_features) return fa.max_features < fb.max_features;
    if (fa.ngram_hi - fa.ngram_lo != fb.ngram_hi - fb.ngram_lo) return fa.ngram_hi - fa.ngram_lo < fb.ngram_hi - fb.ngram_lo;
    if (fa.ngram_hi != fb.ngram_hi) return fa.ngram_hi < fb.ngram_hi;
    if (a.point.p_pos != b.point.p_pos) return a.point.p_pos < b.point.p_pos;
    if (a.point.p_ner != b.point.p_ner) return a.point.p_ner < b.point.p_ner;
    return a.first < b.first;
  };
  for (const auto& [key, acc] : by_point) {
    const double score = acc.sum / static_cast<double>(acc.n);
    if (!best || better(acc, score, *best, best_score)) {
      best = &acc;
      best_score = score;
    }
  }
  return best->point;
}

// ---- step 2 and export ----------------------------------------------------------------------

Corpus delexicalize_corpus(const Corpus& corpus, const DelexPolicy& policy, const TagProvider& tagger) {
  policy.validate();
  Corpus out;
  out.reserve(corpus.size());
  for (const auto& d : corpus) {
    Document copy = d;
    if (!policy.is_identity()) copy.text = delexicalize(d.text, tagger.tags(d), policy, d.id);
    out.push_back(std::move(copy));
  }
  return out;
}

void export_delexicalized(const Corpus& corpus, const DelexPolicy& policy, const TagProvider& tagger,
                          const std::filesystem::path& path) {
  // Tags are fetched even for the identity policy so missing tags always surface.
  Corpus out;
  out.reserve(corpus.size());
  for (const auto& d : corpus) {
    const auto tags = tagger.tags(d);
    Document copy = d;
    if (!policy.is_identity()) copy.text = delexicalize(d.text, tags, policy, d.id);
    out.push_back(std::move(copy));
  }
  write_jsonl(path, out);
}

NBModel train_step2(const Corpus& corpus, const SweepPoint& point, const Step2Options& options) {
  const auto balanced = undersample_balanced(corpus, options.sample_seed);
  DelexPolicy policy{point.p_pos, point.p_ner, options.pos_maskable, options.delex_seed};
  const auto delexed = delexicalize_corpus(balanced, policy, tagger_or_default(options.tagger));

  std::vector<std::string> texts;
  std::vector<Label> labels;
  std::set<Domain> domains;
  texts.reserve(delexed.size());
  for (const auto& d : delexed) {
    texts.push_back(d.text);
    labels.push_back(checked_label(d));
    domains.insert(d.domain);
  }

  ModelMetadata meta;
  meta.created_at = options.created_at;
  meta.corpus_fingerprint = corpus_fingerprint(corpus);
  ordered_json prov = ordered_json::object();
  prov["step"] = 2;
  prov["domains"] = ordered_json::array();
  for (auto d : domains) prov["domains"].push_back(std::string(to_string(d)));
  prov["input_documents"] = corpus.size();
  prov["training_documents"] = balanced.size();
  prov["sample_seed"] = options.sample_seed;
  prov["delex_seed"] = options.delex_seed;
  prov["point"] = to_json(point);
  for (const auto& [k, v] : options.extra_provenance.items()) prov[k] = v;
  meta.provenance = std::move(prov);
  return train_model(texts, labels, point.features, point.alpha, policy, std::move(meta));
}

}  // namespace varid
