#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "support.hpp"
#include "varid/eval.hpp"
#include "varid/rng.hpp"

using namespace varid;
using test_support::write_text;

namespace {

const Label EP = Label::EP, BP = Label::BP, U = Label::Undetermined;

AnnotationMatrix matrix(const std::vector<std::vector<Label>>& rows, std::vector<std::optional<Label>> silver = {}) {
  AnnotationMatrix m;
  m.annotator_count = rows.empty() ? 0 : rows[0].size();
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.items.push_back({"i" + std::to_string(i), Domain::Journalistic, rows[i], i < silver.size() ? silver[i] : std::nullopt});
  return m;
}

// Textbook Fleiss formula in floating point.
double oracle_kappa(const std::vector<std::vector<Label>>& rows) {
  const double n = static_cast<double>(rows[0].size()), N = static_cast<double>(rows.size());
  std::array<double, 3> totals{};
  double pbar = 0;
  for (const auto& r : rows) {
    std::array<double, 3> c{};
    for (auto l : r) c[static_cast<std::size_t>(l)] += 1;
    double sq = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      sq += c[j] * c[j];
      totals[j] += c[j];
    }
    pbar += (sq - n) / (n * (n - 1));
  }
  pbar /= N;
  double pe = 0;
  for (double t : totals) pe += (t / (N * n)) * (t / (N * n));
  return (pbar - pe) / (1 - pe);
}

std::vector<Label> random_labels(SplitMix64& rng, std::size_t n) {
  std::vector<Label> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(rng.below(2) ? BP : EP);
  return v;
}

}  // namespace

TEST_CASE("confusion_and_f1 examples") {
  const std::vector<Label> gold = {EP, EP, BP, BP};
  CHECK(confusion_and_f1(gold, gold).macro_f1 == 1.0);
  const std::vector<Label> constant = {EP, EP, EP, EP};
  const auto c = confusion_and_f1(constant, gold);
  CHECK(c.macro_f1 == doctest::Approx(1.0 / 3.0));
  CHECK(c.per_class[0].f1 == doctest::Approx(2.0 / 3.0));
  CHECK(c.per_class[1].f1 == 0.0);

  const std::vector<Label> g = {EP, EP, EP, BP, BP};
  const std::vector<Label> p = {EP, EP, BP, EP, BP};
  CHECK(confusion_and_f1(p, g).per_class[0].f1 == doctest::Approx(2.0 / 3.0));

  const std::vector<Label> shorter = {EP};
  CHECK_THROWS_AS(confusion_and_f1(shorter, gold), Error);

  const std::vector<Label> only_ep = {EP, EP};
  const auto absent = confusion_and_f1(only_ep, only_ep);
  CHECK(absent.per_class[1].absent_in_gold);
  CHECK(absent.per_class[1].f1 == 0.0);
}

TEST_CASE("macro-F1 matches a brute-force confusion matrix") {
  SplitMix64 rng(3);
  for (int round = 0; round < 200; ++round) {
    const auto n = 1 + rng.below(30);
    const auto gold = random_labels(rng, n), pred = random_labels(rng, n);
    double f1_sum = 0;
    for (Label c : {EP, BP}) {
      double tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += pred[i] == c && gold[i] == c;
        fp += pred[i] == c && gold[i] != c;
        fn += pred[i] != c && gold[i] == c;
      }
      f1_sum += (tp + fn) == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
    }
    const auto r = confusion_and_f1(pred, gold);
    CHECK(r.macro_f1 == doctest::Approx(f1_sum / 2).epsilon(1e-12));
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) agree += pred[i] == gold[i];
    CHECK(r.accuracy == doctest::Approx(static_cast<double>(agree) / n));
  }
}

TEST_CASE("fleiss kappa worked values") {
  const auto m = matrix({{EP, EP, EP}, {EP, EP, BP}});
  CHECK(fleiss_kappa_exact(m, false) == Rational{-1, 5});
  CHECK(fleiss_kappa(matrix({{EP, EP, EP}, {BP, BP, BP}}), false) == 1.0);
  CHECK(fleiss_kappa(matrix({{EP, EP}, {EP, EP}}), false) == 1.0);
  CHECK_THROWS_AS(fleiss_kappa(matrix({{EP, EP, EP}}), false), Error);
  CHECK(fleiss_kappa(matrix({{EP, EP, U}, {EP, EP, EP}, {BP, BP, BP}}), true) == 1.0);
}

TEST_CASE("fleiss kappa matches the textbook formula and is permutation invariant") {
  SplitMix64 rng(17);
  for (int round = 0; round < 200; ++round) {
    const auto items = 2 + rng.below(15), raters = 2 + rng.below(4);
    std::vector<std::vector<Label>> rows(items);
    for (auto& r : rows)
      for (std::size_t k = 0; k < raters; ++k) r.push_back(static_cast<Label>(rng.below(3)));
    const auto m = matrix(rows);
    std::array<std::size_t, 3> used{};
    for (const auto& r : rows)
      for (auto l : r) ++used[static_cast<std::size_t>(l)];
    if (std::ranges::count(used, 0) == 2) continue;
    const double k = fleiss_kappa(m, false);
    CHECK(k == doctest::Approx(oracle_kappa(rows)).epsilon(1e-12));
    CHECK(k >= -1.0);
    CHECK(k <= 1.0);

    auto shuffled = rows;
    shuffle(shuffled, rng);
    CHECK(fleiss_kappa_exact(matrix(shuffled), false) == fleiss_kappa_exact(m, false));
    auto columns = rows;
    for (auto& r : columns) std::reverse(r.begin(), r.end());
    CHECK(fleiss_kappa_exact(matrix(columns), false) == fleiss_kappa_exact(m, false));

    bool unanimous = true;
    for (const auto& r : rows) unanimous &= std::ranges::all_of(r, [&](Label l) { return l == r[0]; });
    CHECK((k == 1.0) == unanimous);
  }
}

TEST_CASE("majority and silver accuracy") {
  const auto m = matrix({{EP, EP, BP}, {U, U, BP}, {EP, BP, U}}, {EP, BP, EP});
  const auto s = majority_and_accuracy(m);
  CHECK(s.items == 3);
  CHECK(s.majority_items == 2);
  CHECK(s.majority_rate == doctest::Approx(2.0 / 3.0));
  REQUIRE(s.silver_accuracy);
  CHECK(*s.silver_accuracy == 1.0);
  CHECK(s.undetermined_rate == doctest::Approx(2.0 / 3.0));

  const auto wrong = majority_and_accuracy(matrix({{EP, EP, BP}, {BP, BP, BP}}, {BP, BP}));
  CHECK(*wrong.silver_accuracy == 0.5);
  CHECK(!majority_and_accuracy(matrix({{EP, EP, BP}})).silver_accuracy);
}

TEST_CASE("majority rate plus three-way splits is one") {
  SplitMix64 rng(23);
  for (int round = 0; round < 100; ++round) {
    std::vector<std::vector<Label>> rows(1 + rng.below(20));
    std::size_t splits = 0;
    for (auto& r : rows) {
      for (int k = 0; k < 3; ++k) r.push_back(static_cast<Label>(rng.below(3)));
      splits += r[0] != r[1] && r[1] != r[2] && r[0] != r[2];
    }
    const auto s = majority_and_accuracy(matrix(rows));
    CHECK(s.majority_rate + static_cast<double>(splits) / rows.size() == doctest::Approx(1.0));
  }
}

TEST_CASE("annotation files and reports") {
  std::istringstream in(
      "{\"id\":\"a\",\"domain\":\"Web\",\"annotations\":[\"EP\",\"EP\",\"EP\"],\"silver\":\"EP\"}\n"
      "{\"id\":\"b\",\"domain\":\"Web\",\"annotations\":[\"EP\",\"EP\",\"BP\"],\"silver\":\"EP\"}\n"
      "{\"id\":\"c\",\"domain\":\"Legal\",\"annotations\":[\"U\",\"Undetermined\",\"BP\"]}\n");
  const auto m = parse_annotations(in);
  CHECK(m.annotator_count == 3);
  CHECK(m.items[2].labels[0] == U);
  const auto r = agreement_report(m);
  CHECK(r.per_domain.size() == 2);
  CHECK(*r.per_domain.at(Domain::Web).fleiss_kappa == doctest::Approx(-0.2));
  CHECK(!r.per_domain.at(Domain::Legal).fleiss_kappa);
  const auto table = format_agreement_table(r);
  CHECK(table.find("Kappa w/o U") != std::string::npos);
  CHECK(table.find("All") != std::string::npos);
  CHECK(to_json(r).contains("fleiss_kappa"));
  CHECK(to_json(r)["per_domain"].contains("Web"));

  std::istringstream bad("{\"id\":\"a\",\"annotations\":[\"EP\",\"EP\"]}\n{\"id\":\"b\",\"annotations\":[\"EP\"]}\n");
  CHECK_THROWS_AS(parse_annotations(bad), ParseError);
  std::istringstream bad_label("{\"id\":\"a\",\"annotations\":[\"EP\",\"XX\"]}\n");
  CHECK_THROWS_AS(parse_annotations(bad_label), ParseError);
}

TEST_CASE("DSL-TL ingestion") {
  test_support::TempDir tmp;
  const auto path = tmp / "dsl.tsv";
  write_text(path, "id\ttext\tlabel\n1\tUm texto.\tPT-PT\n2\tOutro texto.\tPT-BR\n3\tAmbos.\tBoth\n4\tMais.\tPT-BR\n5\tMesmo.\tPT\n");
  const auto b = ingest_benchmark(path, BenchmarkFormat::DSLTL);
  CHECK(b.ep_count == 1);
  CHECK(b.bp_count == 2);
  CHECK(b.dropped_both == 2);
  CHECK(b.docs[0].id == "1");
  CHECK(benchmark_report(b)["EP"] == 1);

  write_text(path, "1\tx\tPT-PT\n2\ty\tPT-AO\n");
  try {
    ingest_benchmark(path, BenchmarkFormat::DSLTL);
    FAIL("expected an error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("\"PT-AO\"") != std::string::npos);
    CHECK(e.line() == 2);
  }
  CHECK(parse_benchmark_format("dsl-tl") == BenchmarkFormat::DSLTL);
  CHECK(parse_benchmark_format("FRMT") == BenchmarkFormat::FRMT);
}

TEST_CASE("FRMT ingestion pairs translations") {
  test_support::TempDir tmp;
  std::filesystem::create_directories(tmp / "lexical");
  write_text(tmp / "lexical" / "test_lexical_pt-PT.tsv", "bus\tautocarro\ntrain\tcomboio\nempty\t\n");
  write_text(tmp / "lexical" / "test_lexical_pt-BR.tsv", "bus\tônibus\ntrain\ttrem\nempty\tvazio\n");
  write_text(tmp / "entity_pt-PT.tsv", "Lisbon\tLisboa\n");
  write_text(tmp / "entity_pt-BR.tsv", "Lisbon\tLisboa\n");
  const auto b = ingest_benchmark(tmp.path(), BenchmarkFormat::FRMT);
  CHECK(b.ep_count == 3);
  CHECK(b.bp_count == 4);
  CHECK(b.dropped_empty == 1);
  CHECK(b.unpaired == 1);
  CHECK(b.pairs.size() == 3);
  std::map<std::string, std::size_t> buckets;
  for (const auto& p : b.pairs) ++buckets[p.bucket];
  CHECK(buckets["lexical"] == 2);
  CHECK(buckets["entity"] == 1);
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : b.docs) by_id[d.id] = &d;
  for (const auto& p : b.pairs) {
    CHECK(by_id.at(p.ep_id)->label == EP);
    CHECK(by_id.at(p.bp_id)->label == BP);
  }
  CHECK_THROWS_AS(ingest_benchmark(tmp / "missing", BenchmarkFormat::FRMT), Error);
}

TEST_CASE("paired bucket analysis") {
  std::vector<DocPair> pairs;
  std::unordered_map<std::string, Label> perfect, constant, mixed;
  for (int i = 0; i < 4; ++i) {
    const auto e = "e" + std::to_string(i), b = "b" + std::to_string(i);
    pairs.push_back({"p" + std::to_string(i), "entity", e, b});
    perfect[e] = EP;
    perfect[b] = BP;
    constant[e] = constant[b] = EP;
    mixed[e] = EP;
    mixed[b] = i == 0 ? EP : BP;
  }
  CHECK(paired_bucket_analysis(perfect, pairs).same_label_pair_rate == 0.0);
  const auto c = paired_bucket_analysis(constant, pairs);
  CHECK(c.same_label_pair_rate == 1.0);
  CHECK(c.per_bucket.at("entity").metrics.macro_f1 == doctest::Approx(1.0 / 3.0));
  CHECK(paired_bucket_analysis(mixed, pairs).same_label_pair_rate == 0.25);
  mixed.erase("b2");
  try {
    paired_bucket_analysis(mixed, pairs);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("p2") != std::string::npos);
  }
}
