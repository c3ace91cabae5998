// varid: command-line front end for the EP/BP variety identification pipeline.

#include <CLI11.hpp>

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "varid/cleaning.hpp"
#include "varid/corpus.hpp"
#include "varid/eval.hpp"
#include "varid/features.hpp"
#include "varid/model.hpp"
#include "varid/protocol.hpp"
#include "varid/synth.hpp"
#include "varid/tagging.hpp"

namespace fs = std::filesystem;
using namespace varid;

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (unknown flag, bad value)\n"
    "  3  I/O error (missing or unreadable file)\n"
    "  4  schema or data error in an input\n"
    "  5  model artifact version mismatch, or an integrity failure (content hash, tag spans)\n"
    "  6  protocol violation\n"
    "Errors are reported on stderr as a JSON object {\"error\": {...}}.\n"
    "VARID_WORKERS sets the default worker count for sweeps.";

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage:
      return 2;
    case ErrorKind::Io:
      return 3;
    case ErrorKind::Schema:
    case ErrorKind::Data:
      return 4;
    case ErrorKind::Version:
    case ErrorKind::Integrity:
      return 5;
    case ErrorKind::Protocol:
      return 6;
  }
  return 1;
}

int report_error(std::string_view kind, const std::string& message, int code) {
  ordered_json e;
  e["kind"] = std::string(kind);
  e["message"] = message;
  e["exit_code"] = code;
  ordered_json j;
  j["error"] = std::move(e);
  std::cerr << j.dump() << '\n';
  return code;
}

std::size_t default_workers() {
  if (const char* env = std::getenv("VARID_WORKERS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string default_created_at() {
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      const std::time_t t = static_cast<std::time_t>(std::stoll(env));
      std::tm tm{};
      gmtime_r(&t, &tm);
      char buf[32];
      std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
      return buf;
    } catch (const std::exception&) {
    }
  }
  return "1970-01-01T00:00:00Z";
}

Domain domain_arg(const std::string& s) {
  const auto d = parse_domain_loose(s);
  if (!d || *d == Domain::Unknown) throw Error(ErrorKind::Usage, "unknown domain \"" + s + "\"");
  return *d;
}

PosSet pos_set_arg(const std::string& list) {
  PosSet set;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto t = parse_pos(item);
    if (!t) throw Error(ErrorKind::Usage, "unknown POS tag \"" + item + "\"");
    set.insert(*t);
  }
  return set;
}

void emit(const ordered_json& j, const std::string& out) {
  const auto text = dump_canonical(j) + "\n";
  if (out.empty() || out == "-")
    std::cout << text;
  else
    write_file_atomic(out, text);
}

// The invoked subcommand's options with their effective values, loadable by --config.
void write_resolved_config(const CLI::App& app, const fs::path& next_to) {
  const fs::path target =
      fs::is_directory(next_to) ? next_to / "config.toml" : fs::path(next_to.string() + ".config.toml");
  std::string text;
  for (const auto* sub : app.get_subcommands()) {
    // Unused members of mutually exclusive groups would conflict on reload.
    std::set<std::string> skip;
    for (const auto* opt : sub->get_options())
      if (opt->count() == 0 && !opt->get_excludes().empty()) skip.insert(opt->get_single_name() + "=");
    text += "[" + sub->get_name() + "]\n";
    std::istringstream lines(sub->config_to_str(true, false));
    std::string line;
    while (std::getline(lines, line)) {
      const bool skipped = std::ranges::any_of(skip, [&](const std::string& p) { return line.starts_with(p); });
      if (!skipped) text += line + "\n";
    }
  }
  write_file_atomic(target, text);
}

struct TaggerArgs {
  std::string lexicon;
  std::string tags;
};

struct Tagger {
  std::unique_ptr<Lexicon> lexicon;
  std::unique_ptr<TagProvider> provider;
};

Tagger make_tagger(const TaggerArgs& a, const std::vector<const Corpus*>& corpora) {
  Tagger t;
  if (!a.tags.empty()) {
    std::unordered_map<std::string, std::string> texts;
    for (const auto* c : corpora)
      for (const auto& d : *c) texts.emplace(d.id, d.text);
    t.provider = std::make_unique<PretaggedProvider>(read_tagged(a.tags, &texts));
  } else if (!a.lexicon.empty()) {
    t.lexicon = std::make_unique<Lexicon>(load_lexicon(a.lexicon));
    t.provider = std::make_unique<LexiconTagProvider>(*t.lexicon);
  } else {
    t.provider = std::make_unique<LexiconTagProvider>(default_lexicon());
  }
  return t;
}

void add_tagger_flags(CLI::App* sub, TaggerArgs& a) {
  auto* lex = sub->add_option("--lexicon", a.lexicon, "Tag dictionary (surface<TAB>tag); default: bundled");
  auto* tags = sub->add_option("--tags", a.tags, "Pre-tagged interchange file instead of the built-in tagger");
  lex->excludes(tags);
}

ordered_json label_counts(const Corpus& docs) {
  ordered_json j = ordered_json::object();
  std::map<std::string, std::size_t> counts;
  for (const auto& d : docs) ++counts[std::string(to_string(d.label))];
  for (const auto& [k, v] : counts) j[k] = v;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EP/BP Portuguese variety identification pipeline", "varid"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file, given before the subcommand; command-line flags win");

  // clean
  struct {
    std::string in, out, report;
    bool keep_diacritics = false, no_boilerplate = false, no_iqr = false;
  } clean;
  auto* c_clean = app.add_subcommand("clean", "Normalize, deduplicate, strip boilerplate and IQR-filter a corpus");
  c_clean->add_option("--in", clean.in, "Input corpus (JSONL)")->required();
  c_clean->add_option("--out", clean.out, "Cleaned corpus (JSONL)")->required();
  c_clean->add_option("--report", clean.report, "Cleaning report (JSON); default: stdout");
  c_clean->add_flag("--keep-diacritics", clean.keep_diacritics, "Keep accents and other non-ASCII letters");
  c_clean->add_flag("--no-boilerplate", clean.no_boilerplate, "Do not strip HTML boilerplate from Web documents");
  c_clean->add_flag("--no-iqr", clean.no_iqr, "Skip the token-count outlier filter");

  // label
  struct {
    std::string in, out, rules;
  } label;
  auto* c_label = app.add_subcommand("label", "Assign silver labels from source/TLD rules");
  c_label->add_option("--in", label.in, "Input corpus (JSONL)")->required();
  c_label->add_option("--rules", label.rules, "Label rule file")->required();
  c_label->add_option("--out", label.out, "Labeled corpus (JSONL)")->required();

  // split
  struct {
    std::string in, out_dir;
    std::size_t train = 8000, val = 1000;
    std::uint64_t seed = 0;
    bool allow_shrink = false;
  } split;
  auto* c_split = app.add_subcommand("split", "Build per-domain balanced train/validation splits");
  c_split->add_option("--in", split.in, "Labeled corpus (JSONL)")->required();
  c_split->add_option("--out-dir", split.out_dir, "Output directory")->required();
  c_split->add_option("--train-per-domain", split.train, "Training documents per domain (even)")->capture_default_str();
  c_split->add_option("--val-per-domain", split.val, "Validation documents per domain (even)")->capture_default_str();
  c_split->add_option("--seed", split.seed, "Sampling seed")->capture_default_str();
  c_split->add_flag("--allow-shrink", split.allow_shrink, "Shrink proportionally when a cell is too small");

  // tag
  struct {
    std::string in, out;
    TaggerArgs tagger;
  } tag;
  auto* c_tag = app.add_subcommand("tag", "POS/NER-tag a corpus into the interchange format");
  c_tag->add_option("--in", tag.in, "Input corpus (JSONL)")->required();
  c_tag->add_option("--out", tag.out, "Tagged corpus")->required();
  c_tag->add_option("--lexicon", tag.tagger.lexicon, "Tag dictionary; default: bundled");

  // delex
  struct {
    std::string in, out, pos_maskable = "NOUN,PROPN,VERB,ADJ";
    double p_pos = 0.0, p_ner = 0.0;
    std::uint64_t seed = 0;
    TaggerArgs tagger;
  } delex;
  auto* c_delex = app.add_subcommand("delex", "Export a delexicalized corpus");
  c_delex->alias("export-delex");
  c_delex->add_option("--in", delex.in, "Input corpus (JSONL)")->required();
  c_delex->add_option("--out", delex.out, "Delexicalized corpus (JSONL)")->required();
  c_delex->add_option("--p-pos", delex.p_pos, "Masking probability for maskable POS tokens")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_delex->add_option("--p-ner", delex.p_ner, "Masking probability for entity tokens")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_delex->add_option("--seed", delex.seed, "Delexicalization seed")->capture_default_str();
  c_delex->add_option("--pos-maskable", delex.pos_maskable, "Comma-separated maskable POS tags")->capture_default_str();
  add_tagger_flags(c_delex, delex.tagger);

  // sweep
  struct {
    std::string splits, grid, train_domain, out, surface_mode = "best", pos_maskable = "NOUN,PROPN,VERB,ADJ";
    std::size_t workers = 0;
    std::uint64_t delex_seed = 0;
    TaggerArgs tagger;
  } sweep;
  sweep.workers = default_workers();
  auto* c_sweep = app.add_subcommand("sweep", "Step 1: leave-one-domain-out grid sweep");
  c_sweep->add_option("--splits", sweep.splits, "Directory written by split")->required();
  c_sweep->add_option("--grid", sweep.grid, "Grid file, or \"full\" for the built-in full grid")->required();
  c_sweep->add_option("--train-domain", sweep.train_domain, "Training domain, or \"all\"")->required();
  c_sweep->add_option("--out", sweep.out, "Sweep log (JSONL, also the checkpoint)")->required();
  c_sweep->add_option("--workers", sweep.workers, "Parallel jobs (default: VARID_WORKERS or core count)");
  c_sweep->add_option("--delex-seed", sweep.delex_seed, "Delexicalization seed")->capture_default_str();
  c_sweep->add_option("--pos-maskable", sweep.pos_maskable, "Comma-separated maskable POS tags")->capture_default_str();
  c_sweep->add_option("--surface-mode", sweep.surface_mode, "Delex surface: best or marginal")
      ->check(CLI::IsMember({"best", "marginal"}))
      ->capture_default_str();
  add_tagger_flags(c_sweep, sweep.tagger);

  // train
  struct {
    std::string in, out, from_sweep, gold, analyzer = "word", created_at, pos_maskable = "NOUN,PROPN,VERB,ADJ";
    double p_pos = 0.0, p_ner = 0.0, alpha = 1.0;
    int ngram_lo = 1, ngram_hi = 1;
    std::size_t max_features = 10000;
    bool lowercase = true;
    std::uint64_t sample_seed = 0, delex_seed = 0;
    TaggerArgs tagger;
  } train;
  train.created_at = default_created_at();
  auto* c_train = app.add_subcommand("train", "Step 2: train the final model on all domains");
  c_train->add_option("--in", train.in, "Labeled corpus (JSONL)")->required();
  c_train->add_option("--out", train.out, "Model artifact (JSON)")->required();
  auto* from_sweep =
      c_train->add_option("--from-sweep", train.from_sweep, "Take the best point of a sweep log");
  std::vector<CLI::Option*> point_flags = {
      c_train->add_option("--p-pos", train.p_pos, "POS masking probability")->check(CLI::Range(0.0, 1.0)),
      c_train->add_option("--p-ner", train.p_ner, "Entity masking probability")->check(CLI::Range(0.0, 1.0)),
      c_train->add_option("--analyzer", train.analyzer, "word or char")->check(CLI::IsMember({"word", "char"})),
      c_train->add_option("--ngram-lo", train.ngram_lo, "Smallest n"),
      c_train->add_option("--ngram-hi", train.ngram_hi, "Largest n"),
      c_train->add_option("--max-features", train.max_features, "Vocabulary size"),
      c_train->add_option("--lowercase", train.lowercase, "Lowercase before extracting n-grams (true/false)"),
      c_train->add_option("--alpha", train.alpha, "Additive smoothing")};
  for (auto* o : point_flags) {
    o->capture_default_str();
    from_sweep->excludes(o);
  }
  c_train->add_option("--sample-seed", train.sample_seed, "Undersampling seed")->capture_default_str();
  c_train->add_option("--delex-seed", train.delex_seed, "Delexicalization seed")->capture_default_str();
  c_train->add_option("--pos-maskable", train.pos_maskable, "Comma-separated maskable POS tags")->capture_default_str();
  c_train->add_option("--created-at", train.created_at, "Timestamp recorded in the artifact (default: SOURCE_DATE_EPOCH or the epoch)");
  c_train->add_option("--gold", train.gold, "Gold-labeled JSONL to evaluate the trained model on");
  add_tagger_flags(c_train, train.tagger);

  // predict
  struct {
    std::string model, in, out;
  } predict;
  auto* c_predict = app.add_subcommand("predict", "Label documents with a trained model");
  c_predict->add_option("--model", predict.model, "Model artifact")->required();
  c_predict->add_option("--in", predict.in, "Documents (JSONL)")->required();
  c_predict->add_option("--out", predict.out, "Predictions (JSONL); default: stdout");

  // evaluate
  struct {
    std::string model, in, format = "jsonl", out;
  } evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "Score a model on a benchmark");
  c_eval->add_option("--model", evaluate.model, "Model artifact")->required();
  c_eval->add_option("--in", evaluate.in, "Benchmark file or directory")->required();
  c_eval->add_option("--format", evaluate.format, "dsltl, frmt or jsonl")
      ->check(CLI::IsMember({"dsltl", "frmt", "jsonl"}))
      ->capture_default_str();
  c_eval->add_option("--out", evaluate.out, "Report (JSON); default: stdout");

  // agreement
  struct {
    std::string in, out, table;
  } agreement;
  auto* c_agree = app.add_subcommand("agreement", "Inter-annotator agreement report");
  c_agree->add_option("--in", agreement.in, "Annotations (JSONL)")->required();
  c_agree->add_option("--out", agreement.out, "Report (JSON); default: stdout");
  c_agree->add_option("--table", agreement.table, "Also write the plain-text table to this file");

  // stats
  struct {
    std::string in, out;
  } stats;
  auto* c_stats = app.add_subcommand("stats", "Token statistics per domain and per (domain, label) cell");
  c_stats->add_option("--in", stats.in, "Corpus (JSONL)")->required();
  c_stats->add_option("--out", stats.out, "Report (JSON); default: stdout");

  // synth
  struct {
    std::string out, pairs_out;
    std::size_t docs_per_domain = 2000, pairs = 200;
    std::uint64_t seed = 0;
  } synth_args;
  auto* c_synth = app.add_subcommand("synth", "Write the synthetic confounded corpus");
  c_synth->add_option("--out", synth_args.out, "Corpus (JSONL)")->required();
  c_synth->add_option("--docs-per-domain", synth_args.docs_per_domain, "Documents per domain (even)")->capture_default_str();
  c_synth->add_option("--seed", synth_args.seed, "Generator seed")->capture_default_str();
  c_synth->add_option("--pairs-out", synth_args.pairs_out, "Also write entity pairs (JSONL with pair ids)");
  c_synth->add_option("--pairs", synth_args.pairs, "Number of entity pairs")->capture_default_str();

  // Defaults are captured after all variables are initialised so that the
  // resolved config lists effective values.
  for (auto* sub : app.get_subcommands({}))
    for (auto* opt : sub->get_options())
      if (opt->get_expected_min() > 0) opt->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), 2);
  }

  try {
    if (c_clean->parsed()) {
      const auto docs = read_jsonl(clean.in);
      CleaningOptions opts{clean.keep_diacritics, !clean.no_boilerplate, !clean.no_iqr};
      const auto result = clean_corpus(docs, opts);
      write_jsonl(clean.out, result.docs);
      write_resolved_config(app, clean.out);
      emit(to_json(result.report), clean.report);
      std::cerr << "clean: " << result.report.input_count << " in, " << result.report.output_count << " out ("
                << result.report.dropped_null_empty << " empty, " << result.report.dropped_duplicates
                << " duplicate, " << result.report.dropped_iqr << " outlier)\n";
    } else if (c_label->parsed()) {
      const auto rules = load_label_rules(label.rules);
      auto docs = read_jsonl(label.in);
      for (auto& d : docs) d = silver_label(std::move(d), rules);
      write_jsonl(label.out, docs);
      write_resolved_config(app, label.out);
      ordered_json j;
      j["documents"] = docs.size();
      j["labels"] = label_counts(docs);
      emit(j, "");
      std::cerr << "label: " << docs.size() << " documents\n";
    } else if (c_split->parsed()) {
      SplitOptions opts;
      opts.train_per_domain = split.train;
      opts.val_per_domain = split.val;
      opts.seed = split.seed;
      opts.allow_shrink = split.allow_shrink;
      const auto splits = build_protocol_splits(read_jsonl(split.in), opts);
      write_splits(split.out_dir, splits);
      write_resolved_config(app, split.out_dir);
      ordered_json j;
      j["seed"] = splits.seed;
      ordered_json per = ordered_json::object();
      for (auto d : splits.domains()) {
        per[std::string(to_string(d))] = {{"train", splits.train.at(d).size()}, {"val", splits.val.at(d).size()}};
      }
      j["domains"] = std::move(per);
      emit(j, "");
      std::cerr << "split: " << splits.domains().size() << " domains written to " << split.out_dir << "\n";
    } else if (c_tag->parsed()) {
      const auto docs = read_jsonl(tag.in);
      const auto tagger = make_tagger(tag.tagger, {&docs});
      std::ostringstream out;
      std::size_t tokens = 0;
      for (const auto& d : docs) {
        const auto t = tagger.provider->tags(d);
        tokens += t.size();
        write_tagged(out, d.id, t);
      }
      write_file_atomic(tag.out, out.str());
      write_resolved_config(app, tag.out);
      emit(ordered_json{{"documents", docs.size()}, {"tokens", tokens}}, "");
      std::cerr << "tag: " << docs.size() << " documents, " << tokens << " tokens\n";
    } else if (c_delex->parsed()) {
      const auto docs = read_jsonl(delex.in);
      const auto tagger = make_tagger(delex.tagger, {&docs});
      DelexPolicy policy{delex.p_pos, delex.p_ner, pos_set_arg(delex.pos_maskable), delex.seed};
      export_delexicalized(docs, policy, *tagger.provider, delex.out);
      write_resolved_config(app, delex.out);
      emit(ordered_json{{"documents", docs.size()}, {"policy", to_json(policy)}}, "");
      std::cerr << "delex: " << docs.size() << " documents written to " << delex.out << "\n";
    } else if (c_sweep->parsed()) {
      const auto splits = read_splits(sweep.splits);
      const SweepGrid grid = sweep.grid == "full" ? full_grid() : load_grid(sweep.grid);
      const auto points = grid.points();
      std::vector<Domain> train_domains;
      if (sweep.train_domain == "all")
        train_domains = splits.domains();
      else
        train_domains = {domain_arg(sweep.train_domain)};

      std::vector<const Corpus*> corpora;
      for (const auto& [d, docs] : splits.train) corpora.push_back(&docs);
      const auto tagger = make_tagger(sweep.tagger, corpora);

      Step1Options opts;
      opts.delex_seed = sweep.delex_seed;
      opts.pos_maskable = pos_set_arg(sweep.pos_maskable);
      opts.tagger = tagger.provider.get();
      opts.workers = std::max<std::size_t>(1, sweep.workers);
      opts.log_path = sweep.out;
      std::size_t done = 0;
      const std::size_t total = points.size() * train_domains.size();
      opts.on_record = [&](const SweepRecord& r) {
        ++done;
        std::cerr << "sweep: [" << done << "] " << to_string(r.train_domain) << " mean_f1=" << r.mean_f1 << "\n";
      };
      std::vector<SweepRecord> all;
      for (auto d : train_domains) {
        auto records = run_step1(splits, points, d, opts);
        all.insert(all.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
      }
      write_resolved_config(app, sweep.out);
      const auto mode = sweep.surface_mode == "marginal" ? SurfaceMode::MarginalMean : SurfaceMode::BestFeatureConfig;
      ordered_json surface = ordered_json::array();
      for (const auto& [key, f1] : aggregate_delex_surface(all, mode))
        surface.push_back({{"p_pos", key.first}, {"p_ner", key.second}, {"mean_f1", f1}});
      ordered_json j;
      j["records"] = all.size();
      j["train_domains"] = ordered_json::array();
      for (auto d : train_domains) j["train_domains"].push_back(std::string(to_string(d)));
      j["best"] = to_json(select_best(all));
      j["surface_mode"] = sweep.surface_mode;
      j["surface"] = std::move(surface);
      emit(j, "");
      std::cerr << "sweep: " << all.size() << " of " << total << " records in " << sweep.out << "\n";
    } else if (c_train->parsed()) {
      const auto docs = read_jsonl(train.in);
      SweepPoint point;
      if (!train.from_sweep.empty()) {
        point = select_best(read_sweep_log(train.from_sweep));
      } else {
        point.p_pos = train.p_pos;
        point.p_ner = train.p_ner;
        point.features = {*parse_analyzer(train.analyzer), train.ngram_lo, train.ngram_hi, train.max_features,
                          train.lowercase};
        point.features.validate();
        point.alpha = train.alpha;
      }
      const auto tagger = make_tagger(train.tagger, {&docs});
      Step2Options opts;
      opts.sample_seed = train.sample_seed;
      opts.delex_seed = train.delex_seed;
      opts.pos_maskable = pos_set_arg(train.pos_maskable);
      opts.tagger = tagger.provider.get();
      opts.created_at = train.created_at;
      const auto model = train_step2(docs, point, opts);
      save_model(model, train.out);
      write_resolved_config(app, train.out);

      ordered_json j;
      j["model"] = train.out;
      j["point"] = to_json(point);
      j["training_documents"] = model.metadata().provenance.at("training_documents");
      j["vocabulary"] = model.feature_space().dimension();
      if (!train.gold.empty()) {
        const auto gold = read_jsonl(train.gold);
        std::vector<Label> preds, labels;
        for (const auto& d : gold) {
          if (!is_variety(d.label)) continue;
          preds.push_back(model.predict_text(d.text).label);
          labels.push_back(d.label);
        }
        j["gold_evaluation"] = to_json(confusion_and_f1(preds, labels));
      }
      emit(j, "");
      std::cerr << "train: " << model.feature_space().dimension() << " features, model written to " << train.out
                << "\n";
    } else if (c_predict->parsed()) {
      const auto model = load_model(predict.model);
      const auto docs = read_jsonl(predict.in);
      std::string out;
      std::size_t ep = 0;
      for (const auto& d : docs) {
        const auto p = model.predict_text(d.text);
        ep += p.label == Label::EP;
        ordered_json j;
        j["id"] = d.id;
        j["label"] = std::string(to_string(p.label));
        j["log_posterior"] = {{"EP", p.log_posterior[0]}, {"BP", p.log_posterior[1]}};
        out += dump_canonical(j) + "\n";
      }
      if (predict.out.empty() || predict.out == "-") {
        std::cout << out;
      } else {
        write_file_atomic(predict.out, out);
        write_resolved_config(app, predict.out);
      }
      std::cerr << "predict: " << docs.size() << " documents (" << ep << " EP, " << docs.size() - ep << " BP)\n";
    } else if (c_eval->parsed()) {
      const auto model = load_model(evaluate.model);
      const auto bench = ingest_benchmark(evaluate.in, *parse_benchmark_format(evaluate.format));
      std::vector<Label> preds, gold;
      std::unordered_map<std::string, Label> by_id;
      for (const auto& d : bench.docs) {
        const auto p = model.predict_text(d.text).label;
        preds.push_back(p);
        gold.push_back(d.label);
        by_id.emplace(d.id, p);
      }
      ordered_json j;
      j["benchmark"] = benchmark_report(bench);
      j["metrics"] = to_json(confusion_and_f1(preds, gold));
      if (!bench.pairs.empty()) j["paired"] = to_json(paired_bucket_analysis(by_id, bench.pairs));
      emit(j, evaluate.out);
      if (!evaluate.out.empty()) write_resolved_config(app, evaluate.out);
      std::cerr << "evaluate: " << bench.docs.size() << " documents (" << bench.ep_count << " EP, " << bench.bp_count
                << " BP, " << bench.dropped_both << " dropped), macro-F1 " << j["metrics"]["macro_f1"].get<double>()
                << "\n";
    } else if (c_agree->parsed()) {
      const auto report = agreement_report(load_annotations(agreement.in));
      emit(to_json(report), agreement.out);
      const auto table = format_agreement_table(report);
      if (!agreement.table.empty()) write_file_atomic(agreement.table, table);
      std::cerr << table;
    } else if (c_stats->parsed()) {
      const auto report = corpus_stats(read_jsonl(stats.in));
      emit(to_json(report), stats.out);
      std::cerr << "stats: " << report.input_count << " documents\n";
    } else if (c_synth->parsed()) {
      synth::ConfoundedOptions opts;
      opts.docs_per_domain = synth_args.docs_per_domain;
      opts.seed = synth_args.seed;
      const auto corpus = synth::confounded_corpus(opts);
      write_jsonl(synth_args.out, corpus);
      ordered_json j;
      j["documents"] = corpus.size();
      if (!synth_args.pairs_out.empty()) {
        const auto pairs = synth::entity_pairs(synth_args.pairs, synth_args.seed);
        write_jsonl(synth_args.pairs_out, pairs.docs);
        j["pairs"] = pairs.pairs.size();
      }
      emit(j, "");
      std::cerr << "synth: " << corpus.size() << " documents written to " << synth_args.out << "\n";
    }
  } catch (const Error& e) {
    return report_error(to_string(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const fs::filesystem_error& e) {
    return report_error("io", e.what(), 3);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 0;
}
