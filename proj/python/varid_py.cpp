#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "varid/cleaning.hpp"
#include "varid/corpus.hpp"
#include "varid/eval.hpp"
#include "varid/json_util.hpp"
#include "varid/model.hpp"
#include "varid/protocol.hpp"
#include "varid/synth.hpp"
#include "varid/tagging.hpp"

namespace py = pybind11;
using namespace varid;

namespace {

py::object to_py(const ordered_json& j) {
  switch (j.type()) {
    case ordered_json::value_t::null:
      return py::none();
    case ordered_json::value_t::boolean:
      return py::bool_(j.get<bool>());
    case ordered_json::value_t::number_integer:
      return py::int_(j.get<std::int64_t>());
    case ordered_json::value_t::number_unsigned:
      return py::int_(j.get<std::uint64_t>());
    case ordered_json::value_t::number_float:
      return py::float_(j.get<double>());
    case ordered_json::value_t::string:
      return py::str(j.get<std::string>());
    case ordered_json::value_t::array: {
      py::list out;
      for (const auto& x : j) out.append(to_py(x));
      return std::move(out);
    }
    case ordered_json::value_t::object: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_py(v);
      return std::move(out);
    }
    default:
      throw Error(ErrorKind::Schema, "unsupported JSON value");
  }
}

ordered_json from_py(const py::handle& h) {
  if (h.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(h)) return h.cast<bool>();
  if (py::isinstance<py::int_>(h)) return h.cast<std::int64_t>();
  if (py::isinstance<py::float_>(h)) return h.cast<double>();
  if (py::isinstance<py::str>(h)) return h.cast<std::string>();
  if (py::isinstance<py::dict>(h)) {
    ordered_json out = ordered_json::object();
    for (const auto& [k, v] : h.cast<py::dict>()) out[py::str(k).cast<std::string>()] = from_py(v);
    return out;
  }
  if (py::isinstance<py::list>(h) || py::isinstance<py::tuple>(h)) {
    ordered_json out = ordered_json::array();
    for (const auto& x : h) out.push_back(from_py(x));
    return out;
  }
  throw Error(ErrorKind::Usage, "cannot convert " + py::repr(h).cast<std::string>() + " to JSON");
}

Corpus corpus_from_py(const py::iterable& docs) {
  std::string lines;
  for (const auto& d : docs) lines += dump_canonical(from_py(d)) + "\n";
  std::istringstream in(lines);
  return parse_jsonl(in);
}

py::list corpus_to_py(const Corpus& docs) {
  py::list out;
  for (const auto& d : docs) out.append(to_py(ordered_json::parse(to_jsonl_line(d))));
  return out;
}

Label label_arg(const std::string& s) {
  const auto l = parse_label(s);
  if (!l) throw Error(ErrorKind::Usage, "unknown label \"" + s + "\"");
  return *l;
}

std::vector<Label> labels_arg(const std::vector<std::string>& v) {
  std::vector<Label> out;
  for (const auto& s : v) out.push_back(label_arg(s));
  return out;
}

Domain domain_arg(const std::string& s) {
  const auto d = parse_domain_loose(s);
  if (!d) throw Error(ErrorKind::Usage, "unknown domain \"" + s + "\"");
  return *d;
}

PosSet pos_arg(const std::optional<std::vector<std::string>>& tags) {
  if (!tags) return default_pos_maskable();
  PosSet out;
  for (const auto& t : *tags) {
    const auto p = parse_pos(t);
    if (!p) throw Error(ErrorKind::Usage, "unknown POS tag \"" + t + "\"");
    out.insert(*p);
  }
  return out;
}

ProtocolSplits splits_from_py(const py::dict& splits) {
  ProtocolSplits out;
  for (const auto& [part, target] : {std::pair{"train", &out.train}, std::pair{"val", &out.val}})
    for (const auto& [k, v] : splits[part].cast<py::dict>())
      (*target)[domain_arg(py::str(k))] = corpus_from_py(v.cast<py::iterable>());
  if (splits.contains("seed")) out.seed = splits["seed"].cast<std::uint64_t>();
  return out;
}

py::dict splits_to_py(const ProtocolSplits& s) {
  py::dict train, val;
  for (const auto& [d, docs] : s.train) train[py::str(std::string(to_string(d)))] = corpus_to_py(docs);
  for (const auto& [d, docs] : s.val) val[py::str(std::string(to_string(d)))] = corpus_to_py(docs);
  py::dict out;
  out["train"] = train;
  out["val"] = val;
  out["seed"] = s.seed;
  return out;
}

SweepGrid grid_from_py(const py::dict& axes) {
  std::string text;
  for (const auto& [k, v] : axes) text += py::str(k).cast<std::string>() + " = " + from_py(v).dump() + "\n";
  std::istringstream in(text);
  return parse_grid(in);
}

py::tuple prediction_to_py(const Prediction& p) {
  py::dict post;
  post["EP"] = p.log_posterior[0];
  post["BP"] = p.log_posterior[1];
  return py::make_tuple(std::string(to_string(p.label)), post);
}

}  // namespace

PYBIND11_MODULE(_varid, m) {
  m.doc() = "European vs Brazilian Portuguese variety identification";
  m.attr("__version__") = std::string(kToolVersion);

  static const py::handle error_type = py::exception<Error>(m, "VaridError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  // ---- text ----
  m.def("normalize_text", &normalize_text, py::arg("text"), py::arg("keep_diacritics") = false);
  m.def("tokenize", &tokenize_words, py::arg("text"));
  m.def(
      "ngrams",
      [](const std::string& text, const std::string& analyzer, std::pair<int, int> ngram_range, bool lowercase) {
        const auto a = parse_analyzer(analyzer);
        if (!a) throw Error(ErrorKind::Usage, "analyzer must be word or char");
        FeatureConfig c{*a, ngram_range.first, ngram_range.second, 1, lowercase};
        c.validate();
        const auto counts = extract_ngrams(text, c);
        return std::map<std::string, std::uint32_t>(counts.begin(), counts.end());
      },
      py::arg("text"), py::arg("analyzer") = "word", py::arg("ngram_range") = std::pair{1, 1},
      py::arg("lowercase") = true);

  // ---- corpus ----
  m.def(
      "clean",
      [](const py::iterable& docs, bool keep_diacritics, bool strip_boilerplate, bool iqr) {
        const auto r = clean_corpus(corpus_from_py(docs), CleaningOptions{keep_diacritics, strip_boilerplate, iqr});
        return py::make_tuple(corpus_to_py(r.docs), to_py(to_json(r.report)));
      },
      py::arg("docs"), py::arg("keep_diacritics") = false, py::arg("strip_boilerplate") = true,
      py::arg("iqr") = true, "Returns (cleaned documents, report).");
  m.def(
      "silver_label",
      [](const py::iterable& docs, const std::string& rules) {
        std::istringstream in(rules);
        const auto set = parse_label_rules(in);
        auto corpus = corpus_from_py(docs);
        for (auto& d : corpus) d = silver_label(std::move(d), set);
        return corpus_to_py(corpus);
      },
      py::arg("docs"), py::arg("rules"), "`rules` is the text of a label rule file.");
  m.def(
      "build_splits",
      [](const py::iterable& docs, std::size_t train_per_domain, std::size_t val_per_domain, std::uint64_t seed,
         bool allow_shrink) {
        return splits_to_py(build_protocol_splits(
            corpus_from_py(docs), SplitOptions{train_per_domain, val_per_domain, seed, allow_shrink}));
      },
      py::arg("docs"), py::arg("train_per_domain") = 8000, py::arg("val_per_domain") = 1000, py::arg("seed") = 0,
      py::arg("allow_shrink") = false);
  m.def(
      "undersample",
      [](const py::iterable& docs, std::uint64_t seed) {
        return corpus_to_py(undersample_balanced(corpus_from_py(docs), seed));
      },
      py::arg("docs"), py::arg("seed") = 0);
  m.def(
      "fingerprint", [](const py::iterable& docs) { return corpus_fingerprint(corpus_from_py(docs)); },
      py::arg("docs"));

  // ---- tagging ----
  m.def(
      "tag",
      [](const std::string& text) {
        py::list out;
        for (const auto& t : tag_lexicon(text, default_lexicon())) {
          py::dict d;
          d["surface"] = t.surface;
          d["pos"] = std::string(to_string(t.pos));
          d["ner"] = std::string(to_string(t.ner));
          d["start"] = t.span.start;
          d["end"] = t.span.end;
          out.append(d);
        }
        return out;
      },
      py::arg("text"), "Tags with the bundled lexicon tagger.");
  m.def(
      "delexicalize",
      [](const std::string& text, double p_pos, double p_ner, std::uint64_t seed, const std::string& doc_id,
         const std::optional<std::vector<std::string>>& pos_maskable) {
        DelexPolicy p{p_pos, p_ner, pos_arg(pos_maskable), seed};
        p.validate();
        return delexicalize(text, tag_lexicon(text, default_lexicon()), p, doc_id);
      },
      py::arg("text"), py::arg("p_pos") = 0.0, py::arg("p_ner") = 0.0, py::arg("seed") = 0, py::arg("doc_id") = "",
      py::arg("pos_maskable") = py::none());

  // ---- model ----
  py::class_<NBModel>(m, "Model")
      .def_static(
          "train",
          [](const std::vector<std::string>& texts, const std::vector<std::string>& labels,
             const std::string& analyzer, std::pair<int, int> ngram_range, std::size_t max_features, bool lowercase,
             double alpha) {
            const auto a = parse_analyzer(analyzer);
            if (!a) throw Error(ErrorKind::Usage, "analyzer must be word or char");
            FeatureConfig c{*a, ngram_range.first, ngram_range.second, max_features, lowercase};
            c.validate();
            const auto l = labels_arg(labels);
            py::gil_scoped_release release;
            return train_model(texts, l, c, alpha, DelexPolicy{});
          },
          py::arg("texts"), py::arg("labels"), py::arg("analyzer") = "word", py::arg("ngram_range") = std::pair{1, 1},
          py::arg("max_features") = 10000, py::arg("lowercase") = true, py::arg("alpha") = 1.0)
      .def_static(
          "train_step2",
          [](const py::iterable& docs, const py::dict& point, std::uint64_t sample_seed, std::uint64_t delex_seed) {
            Step2Options o;
            o.sample_seed = sample_seed;
            o.delex_seed = delex_seed;
            const auto corpus = corpus_from_py(docs);
            const auto p = sweep_point_from_json(from_py(point));
            py::gil_scoped_release release;
            return train_step2(corpus, p, o);
          },
          py::arg("docs"), py::arg("point"), py::arg("sample_seed") = 0, py::arg("delex_seed") = 0,
          "Undersample, delexicalize with the point's policy and train on every domain.")
      .def_static("load", &load_model, py::arg("path"))
      .def_static("from_json", &deserialize_model, py::arg("text"))
      .def("save", [](const NBModel& self, const std::filesystem::path& p) { save_model(self, p); }, py::arg("path"))
      .def("to_json", &serialize_model)
      .def(
          "predict", [](const NBModel& self, const std::string& text) { return prediction_to_py(self.predict_text(text)); },
          py::arg("text"), "Returns (label, {\"EP\": log posterior, \"BP\": log posterior}).")
      .def(
          "predict_labels",
          [](const NBModel& self, const std::vector<std::string>& texts) {
            std::vector<std::string> out;
            out.reserve(texts.size());
            for (const auto& t : texts) out.emplace_back(to_string(self.predict_text(t).label));
            return out;
          },
          py::arg("texts"))
      .def_property_readonly("vocabulary", [](const NBModel& self) { return self.feature_space().terms(); })
      .def_property_readonly("alpha", [](const NBModel& self) { return self.parameters().alpha; })
      .def_property_readonly("metadata", [](const NBModel& self) {
        py::dict d;
        d["created_at"] = self.metadata().created_at;
        d["corpus_fingerprint"] = self.metadata().corpus_fingerprint;
        d["tool_version"] = self.metadata().tool_version;
        d["provenance"] = to_py(self.metadata().provenance);
        return d;
      });

  // ---- protocol ----
  m.def(
      "sweep",
      [](const py::dict& splits, const py::dict& grid, const std::string& train_domain, std::uint64_t delex_seed,
         std::size_t workers) {
        const auto s = splits_from_py(splits);
        const auto points = grid_from_py(grid).points();
        Step1Options o;
        o.delex_seed = delex_seed;
        o.workers = workers;
        const auto d = domain_arg(train_domain);
        std::vector<SweepRecord> records;
        {
          py::gil_scoped_release release;
          records = run_step1(s, points, d, o);
        }
        py::list out;
        for (const auto& r : records) out.append(to_py(to_json(r)));
        return out;
      },
      py::arg("splits"), py::arg("grid"), py::arg("train_domain"), py::arg("delex_seed") = 0, py::arg("workers") = 1,
      "Leave-one-domain-out sweep. `grid` maps axis names (p_pos, p_ner, analyzer, ngram_range, max_features, "
      "lowercase, alpha) to value lists.");
  m.def(
      "select_best",
      [](const py::list& records) {
        std::vector<SweepRecord> rs;
        for (const auto& r : records) rs.push_back(sweep_record_from_json(from_py(r)));
        return to_py(to_json(select_best(rs)));
      },
      py::arg("records"));
  m.def(
      "delex_surface",
      [](const py::list& records, const std::string& mode) {
        std::vector<SweepRecord> rs;
        for (const auto& r : records) rs.push_back(sweep_record_from_json(from_py(r)));
        const auto m = mode == "marginal" ? SurfaceMode::MarginalMean : SurfaceMode::BestFeatureConfig;
        return aggregate_delex_surface(rs, m);
      },
      py::arg("records"), py::arg("mode") = "best");

  // ---- evaluation ----
  m.def(
      "confusion_and_f1",
      [](const std::vector<std::string>& preds, const std::vector<std::string>& gold) {
        return to_py(to_json(confusion_and_f1(labels_arg(preds), labels_arg(gold))));
      },
      py::arg("preds"), py::arg("gold"));
  m.def(
      "fleiss_kappa",
      [](const std::vector<std::vector<std::string>>& rows, bool exclude_undetermined) {
        AnnotationMatrix mat;
        mat.annotator_count = rows.empty() ? 0 : rows[0].size();
        for (std::size_t i = 0; i < rows.size(); ++i)
          mat.items.push_back({std::to_string(i), Domain::Unknown, labels_arg(rows[i]), std::nullopt});
        mat.validate();
        return fleiss_kappa(mat, exclude_undetermined);
      },
      py::arg("rows"), py::arg("exclude_undetermined") = false, "One row of annotator labels per item.");
  m.def(
      "agreement",
      [](const py::iterable& items) {
        std::string lines;
        for (const auto& it : items) lines += dump_canonical(from_py(it)) + "\n";
        std::istringstream in(lines);
        return to_py(to_json(agreement_report(parse_annotations(in))));
      },
      py::arg("items"), "Items are {id, domain?, annotations: [...], silver?} dicts.");
  m.def(
      "paired_analysis",
      [](const std::map<std::string, std::string>& preds, const py::iterable& pairs) {
        std::unordered_map<std::string, Label> p;
        for (const auto& [k, v] : preds) p.emplace(k, label_arg(v));
        std::vector<DocPair> ps;
        for (const auto& x : pairs) {
          const auto d = x.cast<py::dict>();
          ps.push_back({d["pair_id"].cast<std::string>(), d.contains("bucket") ? d["bucket"].cast<std::string>() : "",
                        d["ep_id"].cast<std::string>(), d["bp_id"].cast<std::string>()});
        }
        return to_py(to_json(paired_bucket_analysis(p, ps)));
      },
      py::arg("preds"), py::arg("pairs"));
  m.def(
      "ingest_benchmark",
      [](const std::filesystem::path& path, const std::string& format) {
        const auto f = parse_benchmark_format(format);
        if (!f) throw Error(ErrorKind::Usage, "format must be dsltl, frmt or jsonl");
        const auto b = ingest_benchmark(path, *f);
        py::list pairs;
        for (const auto& p : b.pairs) {
          py::dict d;
          d["pair_id"] = p.pair_id;
          d["bucket"] = p.bucket;
          d["ep_id"] = p.ep_id;
          d["bp_id"] = p.bp_id;
          pairs.append(d);
        }
        return py::make_tuple(corpus_to_py(b.docs), pairs, to_py(benchmark_report(b)));
      },
      py::arg("path"), py::arg("format"), "Returns (documents, pairs, counts).");

  // ---- synthetic data ----
  m.def(
      "synthetic_corpus",
      [](std::size_t docs_per_domain, std::uint64_t seed) {
        synth::ConfoundedOptions o;
        o.docs_per_domain = docs_per_domain;
        o.seed = seed;
        return corpus_to_py(synth::confounded_corpus(o));
      },
      py::arg("docs_per_domain") = 2000, py::arg("seed") = 0);
}
