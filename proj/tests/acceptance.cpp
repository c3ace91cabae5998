// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "support.hpp"
#include "varid/cleaning.hpp"
#include "varid/eval.hpp"
#include "varid/json_util.hpp"
#include "varid/model.hpp"
#include "varid/protocol.hpp"
#include "varid/synth.hpp"

using namespace varid;
using test_support::TempDir;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << x;
  return s.str();
}

// ---- 1 ------------------------------------------------------------------------------

Outcome delex_contract() {
  Stopwatch clock;
  const std::size_t n = 10000;
  std::string text;
  TaggedDocument tokens;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) text.push_back(' ');
    tokens.push_back({"casa", PosTag::NOUN, NerTag::NONE, {text.size(), text.size() + 4}});
    text += "casa";
  }
  bool ok = delexicalize(text, tokens, DelexPolicy{0.0, 0.0, default_pos_maskable(), 1}, "acc-1") == text;
  std::string detail = std::string("identity ") + (ok ? "exact" : "differs");
  for (double p : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    const auto out = delexicalize(text, tokens, DelexPolicy{p, 0.0, default_pos_maskable(), 1}, "acc-1");
    std::size_t masked = 0;
    for (const auto& w : tokenize_words(out)) masked += w == "NOUN";
    const double frac = static_cast<double>(masked) / n;
    ok &= std::abs(frac - p) <= 0.02;
    detail += ", p=" + fmt(p, 1) + ":" + fmt(frac);
  }
  const double t = clock.seconds();
  ok &= t < 1.0;
  return {ok, detail + ", " + fmt(t, 3) + " s"};
}

// ---- 2 ------------------------------------------------------------------------------

double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Outcome iqr_oracle() {
  Stopwatch clock;
  SplitMix64 rng(20240601);
  const std::vector<Domain> domains(kKnownDomains.begin(), kKnownDomains.end());
  const auto counter = [](std::string_view t) { return static_cast<std::size_t>(std::stoul(std::string(t))); };
  std::size_t mismatches = 0, dropped = 0;
  for (int round = 0; round < 1000; ++round) {
    Corpus c;
    const auto size = rng.below(201);
    const auto n_domains = 1 + rng.below(domains.size());
    for (std::size_t i = 0; i < size; ++i) {
      Document d;
      d.id = std::to_string(i);
      d.domain = domains[rng.below(n_domains)];
      const auto r = rng.below(20);
      d.text = std::to_string(r == 0 ? rng.below(2000) : r == 1 ? rng.below(3) : 50 + rng.below(40));
      c.push_back(std::move(d));
    }
    std::map<Domain, std::vector<double>> counts;
    for (const auto& d : c) counts[d.domain].push_back(static_cast<double>(counter(d.text)));
    std::map<Domain, std::pair<double, double>> fences;
    for (const auto& [d, v] : counts) {
      if (v.size() < 4) continue;
      const double q1 = oracle_quantile(v, 0.25), q3 = oracle_quantile(v, 0.75);
      fences[d] = {q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1)};
    }
    Corpus expected;
    for (const auto& d : c) {
      const auto it = fences.find(d.domain);
      const double x = static_cast<double>(counter(d.text));
      if (it == fences.end() || (x >= it->second.first && x <= it->second.second)) expected.push_back(d);
    }
    const auto got = iqr_filter(c, counter);
    dropped += got.dropped;
    if (got.docs != expected || got.dropped != c.size() - expected.size()) ++mismatches;
  }
  const double t = clock.seconds();
  return {mismatches == 0 && t < 10.0,
          std::to_string(mismatches) + " mismatching corpora of 1000, " + std::to_string(dropped) +
              " outliers dropped, " + fmt(t, 3) + " s"};
}

// ---- 3 ------------------------------------------------------------------------------

Outcome nb_oracle() {
  SplitMix64 rng(77);
  double worst = 0.0;
  for (int round = 0; round < 200; ++round) {
    const std::size_t dim = 1 + rng.below(30);
    const std::size_t n = 2 + rng.below(19);
    const double alpha = 0.05 + 2.0 * to_unit_double(rng());
    const auto random_vector = [&] {
      SparseVector v;
      for (std::uint32_t j = 0; j < dim; ++j)
        if (rng.below(3) == 0) {
          v.indices.push_back(j);
          v.values.push_back(to_unit_double(rng()));
        }
      return v;
    };
    std::vector<SparseVector> vs;
    std::vector<Label> ls;
    for (std::size_t i = 0; i < n; ++i) {
      vs.push_back(random_vector());
      ls.push_back(i == 0 ? Label::EP : i == 1 ? Label::BP : (rng.below(2) ? Label::EP : Label::BP));
    }
    std::vector<std::string> terms;
    for (std::size_t j = 0; j < dim; ++j) terms.push_back("f" + std::to_string(1000 + j));
    const NBModel model(train_nb(vs, ls, dim, alpha),
                        FeatureSpace(FeatureConfig{}, terms, std::vector<std::uint64_t>(dim, 1), n, "oracle"),
                        DelexPolicy{}, ModelMetadata{});

    // Dense oracle.
    std::vector<std::vector<double>> sums(2, std::vector<double>(dim, 0.0));
    std::array<double, 2> counts{};
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = ls[i] == Label::EP ? 0 : 1;
      counts[c] += 1;
      for (std::size_t k = 0; k < vs[i].size(); ++k) sums[c][vs[i].indices[k]] += vs[i].values[k];
    }
    std::vector<std::vector<double>> loglik(2, std::vector<double>(dim));
    for (std::size_t c = 0; c < 2; ++c) {
      double total = 0;
      for (double s : sums[c]) total += s;
      for (std::size_t j = 0; j < dim; ++j) loglik[c][j] = std::log((sums[c][j] + alpha) / (total + alpha * dim));
    }
    for (int k = 0; k < 10; ++k) {
      const auto v = random_vector();
      std::vector<double> dense(dim, 0.0);
      for (std::size_t i = 0; i < v.size(); ++i) dense[v.indices[i]] = v.values[i];
      std::array<double, 2> score{};
      for (std::size_t c = 0; c < 2; ++c) {
        score[c] = std::log(counts[c] / static_cast<double>(n));
        for (std::size_t j = 0; j < dim; ++j) score[c] += dense[j] * loglik[c][j];
      }
      const double m = std::max(score[0], score[1]);
      const double z = m + std::log(std::exp(score[0] - m) + std::exp(score[1] - m));
      const auto got = model.predict(v).log_posterior;
      worst = std::max({worst, std::abs(got[0] - (score[0] - z)), std::abs(got[1] - (score[1] - z))});
    }
  }
  std::ostringstream d;
  d << "200 training sets, max |error| " << std::scientific << worst;
  return {worst <= 1e-9, d.str()};
}

// ---- 4 ------------------------------------------------------------------------------

Outcome kappa_values() {
  const auto make = [](std::vector<std::vector<Label>> rows) {
    AnnotationMatrix m;
    m.annotator_count = rows[0].size();
    for (std::size_t i = 0; i < rows.size(); ++i) m.items.push_back({"i" + std::to_string(i), Domain::Unknown, rows[i], {}});
    return m;
  };
  const auto k = fleiss_kappa_exact(make({{Label::EP, Label::EP, Label::EP}, {Label::EP, Label::EP, Label::BP}}), false);
  const auto u =
      fleiss_kappa_exact(make({{Label::EP, Label::EP, Label::EP}, {Label::BP, Label::BP, Label::BP}}), false);
  const bool ok = k == Rational{-1, 5} && u == Rational{1, 1};
  return {ok, "kappa = " + std::to_string(static_cast<long long>(k.num)) + "/" +
                  std::to_string(static_cast<long long>(k.den)) + ", unanimous = " +
                  std::to_string(static_cast<long long>(u.num)) + "/" + std::to_string(static_cast<long long>(u.den))};
}

// ---- 5 ------------------------------------------------------------------------------

Outcome cross_domain_reproduction() {
  Stopwatch clock;
  const synth::ConfoundedOptions options;
  const auto corpus = synth::confounded_corpus(options);
  const auto splits = build_protocol_splits(corpus, SplitOptions{1600, 400, 11, false});
  const auto pairs = synth::entity_pairs(200, 3);
  const LexiconTagProvider tagger(default_lexicon());

  const std::vector<SweepPoint> grid = {SweepPoint{0.0, 0.0, FeatureConfig{}, 1.0},
                                        SweepPoint{0.0, 1.0, FeatureConfig{}, 1.0}};
  Step1Options step1;
  step1.workers = std::max(1u, std::thread::hardware_concurrency());
  std::array<double, 2> f1{}, same{};
  for (auto d : splits.domains()) {
    const auto records = run_step1(splits, grid, d, step1);
    for (std::size_t g = 0; g < 2; ++g) {
      f1[g] += records[g].mean_f1;
      const DelexPolicy policy{grid[g].p_pos, grid[g].p_ner, default_pos_maskable(), 0};
      const auto train = delexicalize_corpus(splits.train.at(d), policy, tagger);
      std::vector<std::string> texts;
      std::vector<Label> labels;
      for (const auto& doc : train) {
        texts.push_back(doc.text);
        labels.push_back(doc.label);
      }
      const auto model = train_model(texts, labels, grid[g].features, grid[g].alpha, policy);
      std::unordered_map<std::string, Label> preds;
      for (const auto& doc : pairs.docs) preds[doc.id] = model.predict_text(doc.text).label;
      same[g] += paired_bucket_analysis(preds, pairs.pairs).same_label_pair_rate;
    }
  }
  const double k = static_cast<double>(splits.domains().size());
  for (std::size_t g = 0; g < 2; ++g) {
    f1[g] /= k;
    same[g] /= k;
  }
  const double gain = f1[1] - f1[0], drop = same[0] - same[1];
  const double t = clock.seconds();
  return {gain >= 0.05 && drop >= 0.2 && t < 300.0,
          "held-out macro-F1 " + fmt(f1[0]) + " -> " + fmt(f1[1]) + " (+" + fmt(100 * gain, 2) +
              " pp), same-label pair rate " + fmt(same[0]) + " -> " + fmt(same[1]) + " (-" + fmt(drop) + "), " +
              fmt(t, 1) + " s on " + std::to_string(step1.workers) + " worker(s)"};
}

// ---- 6 ------------------------------------------------------------------------------

// Writes files in the published layouts when no real benchmark files are given.
std::filesystem::path dsltl_fixture(const TempDir& tmp) {
  const auto path = tmp / "DSL-TL-test.tsv";
  SplitMix64 rng(6);
  const auto& words = synth::marker_pairs();
  std::string s = "id\ttext\tlabel\n";
  std::vector<std::string> labels;
  labels.insert(labels.end(), 588, "PT-BR");
  labels.insert(labels.end(), 269, "PT-PT");
  labels.insert(labels.end(), 143, "PT");
  shuffle(labels, rng);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& w = words[rng.below(words.size())];
    s += "pt-" + std::to_string(i) + "\tO " + (labels[i] == "PT-PT" ? w.first : w.second) + " chegou hoje .\t" +
         labels[i] + "\n";
  }
  test_support::write_text(path, s);
  return path;
}

std::filesystem::path frmt_fixture(const TempDir& tmp) {
  const auto root = tmp / "frmt";
  const struct {
    const char* bucket;
    std::size_t ep, bp;
  } buckets[] = {{"entity", 934, 933}, {"lexical", 848, 848}, {"random", 832, 831}};
  for (const auto& b : buckets) {
    const auto dir = root / "dataset" / b.bucket;
    std::filesystem::create_directories(dir);
    for (const auto& [region, n] : {std::pair{std::string("pt-PT"), b.ep}, std::pair{std::string("pt-BR"), b.bp}}) {
      std::string s;
      for (std::size_t i = 0; i < n; ++i)
        s += "Sentence " + std::to_string(i) + " .\tFrase " + std::to_string(i) + " (" + region + ") .\n";
      test_support::write_text(dir / (std::string(b.bucket) + "_test_en_" + region + ".tsv"), s);
    }
  }
  return root;
}

Outcome benchmark_counts() {
  TempDir tmp;
  const char* dsl_env = std::getenv("VARID_DSLTL_TEST");
  const char* frmt_env = std::getenv("VARID_FRMT_DIR");
  const auto dsl_path = dsl_env ? std::filesystem::path(dsl_env) : dsltl_fixture(tmp);
  const auto frmt_path = frmt_env ? std::filesystem::path(frmt_env) : frmt_fixture(tmp);
  const auto dsl = ingest_benchmark(dsl_path, BenchmarkFormat::DSLTL);
  const auto frmt = ingest_benchmark(frmt_path, BenchmarkFormat::FRMT);
  const bool ok = dsl.bp_count == 588 && dsl.ep_count == 269 && frmt.ep_count == 2614 && frmt.bp_count == 2612 &&
                  frmt.docs.size() == 5226;
  return {ok, std::string("DSL-TL (") + (dsl_env ? "supplied" : "generated layout fixture") + ") " +
                  std::to_string(dsl.bp_count) + " BP + " + std::to_string(dsl.ep_count) + " EP, " +
                  std::to_string(dsl.dropped_both) + " Both dropped; FRMT (" +
                  (frmt_env ? "supplied" : "generated layout fixture") + ") " + std::to_string(frmt.ep_count) +
                  " EP + " + std::to_string(frmt.bp_count) + " BP, " + std::to_string(frmt.pairs.size()) + " pairs"};
}

// ---- 7 ------------------------------------------------------------------------------

Outcome end_to_end_determinism() {
  TempDir tmp;
  const std::string cli = VARID_CLI_PATH;
  const std::vector<std::string> steps = {
      "synth --out raw.jsonl --docs-per-domain 300 --seed 5 --pairs-out pairs.jsonl --pairs 50",
      "clean --in raw.jsonl --out clean.jsonl --report clean_report.json",
      "split --in clean.jsonl --out-dir splits --train-per-domain 200 --val-per-domain 80 --seed 2 --allow-shrink",
      "sweep --splits splits --grid ../grid.toml --train-domain all --out sweep.jsonl --workers 2",
      "train --in clean.jsonl --from-sweep sweep.jsonl --out model.json --sample-seed 3 --delex-seed 4",
      "predict --model model.json --in pairs.jsonl --out predictions.jsonl",
  };
  test_support::write_text(tmp / "grid.toml", "p_pos = [0.0, 0.4]\np_ner = [0.0, 1.0]\nmax_features = [2000]\n");
  std::array<std::map<std::string, std::string>, 2> files;
  for (std::size_t run = 0; run < 2; ++run) {
    const auto dir = tmp / ("run" + std::to_string(run));
    std::filesystem::create_directories(dir);
    for (const auto& step : steps) {
      const auto r = test_support::run_command("cd '" + dir.string() + "' && " + cli + " " + step, tmp);
      if (r.exit_code != 0) return {false, "run " + std::to_string(run) + " failed at `" + step + "`: " + r.err};
    }
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
      if (e.is_regular_file())
        files[run][std::filesystem::relative(e.path(), dir).string()] = test_support::read_text(e.path());
  }
  std::size_t differing = 0;
  for (const auto& [name, bytes] : files[0]) {
    const auto it = files[1].find(name);
    if (it == files[1].end() || it->second != bytes) ++differing;
  }
  const bool ok = differing == 0 && files[0].size() == files[1].size() && files[0].contains("model.json") &&
                  files[0].contains("predictions.jsonl") && files[0].contains("sweep.jsonl");
  return {ok, std::to_string(files[0].size()) + " files per run, " + std::to_string(differing) + " differ"};
}

// ---- 8 ------------------------------------------------------------------------------

Outcome protocol_invariants() {
  Stopwatch clock;
  synth::ConfoundedOptions o;
  o.domains.assign(kKnownDomains.begin(), kKnownDomains.end());
  o.docs_per_domain = 120;
  o.seed = 8;
  const auto cleaned = clean_corpus(synth::confounded_corpus(o), CleaningOptions{}).docs;
  std::unordered_map<std::string, std::string> cleaned_text;
  for (const auto& d : cleaned) cleaned_text[d.id] = d.text;
  const auto splits = build_protocol_splits(cleaned, SplitOptions{60, 40, 1, true});

  SweepGrid g;
  g.p_pos = g.p_ner = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  g.max_features = {1000};
  const auto grid = g.points();

  std::size_t events = 0, violations = 0, altered = 0;
  Step1Options opts;
  opts.observer = [&](const EvaluationEvent& e) {
    ++events;
    if (e.eval_domain == e.train_domain) ++violations;
    for (std::size_t i = 0; i < e.docs.size(); ++i)
      if (e.texts[i] != cleaned_text.at(e.docs[i].id) || e.docs[i].domain != e.eval_domain) ++altered;
  };
  std::size_t records = 0;
  for (auto d : splits.domains()) records += run_step1(splits, grid, d, opts).size();

  bool rejected = false;
  try {
    Step1Options bad;
    bad.heldout = splits.domains();
    run_step1(splits, std::span(grid).first(1), Domain::Web, bad);
  } catch (const Error& e) {
    rejected = e.kind() == ErrorKind::Protocol;
  }
  const double t = clock.seconds();
  const std::size_t expected_events = grid.size() * splits.domains().size() * (splits.domains().size() - 1);
  const bool ok = grid.size() == 36 && violations == 0 && altered == 0 && events == expected_events && rejected &&
                  t < 600.0;
  return {ok, std::to_string(grid.size()) + " points x " + std::to_string(splits.domains().size()) +
                  " train domains, " + std::to_string(records) + " records, " + std::to_string(events) +
                  " held-out evaluations, " + std::to_string(violations) + " on the train domain, " +
                  std::to_string(altered) + " altered validation texts, explicit request " +
                  (rejected ? "rejected" : "accepted") + ", " + fmt(t, 1) + " s"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"delexicalization contract", delex_contract},
      {"IQR filter vs brute-force oracle", iqr_oracle},
      {"naive Bayes vs dense oracle", nb_oracle},
      {"Fleiss kappa worked values", kappa_values},
      {"cross-domain delexicalization effect", cross_domain_reproduction},
      {"benchmark ingestion counts", benchmark_counts},
      {"end-to-end determinism", end_to_end_determinism},
      {"protocol structural invariants", protocol_invariants},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
