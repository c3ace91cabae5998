#include <doctest.h>

#include <map>
#include <set>

#include "varid/features.hpp"
#include "varid/synth.hpp"
#include "varid/tagging.hpp"

using namespace varid;

TEST_CASE("confounded corpus shape and determinism") {
  synth::ConfoundedOptions o;
  o.docs_per_domain = 50;
  const auto a = synth::confounded_corpus(o);
  CHECK(a.size() == 200);
  CHECK(a == synth::confounded_corpus(o));
  std::map<std::pair<Domain, Label>, std::size_t> cells;
  for (const auto& d : a) ++cells[{d.domain, d.label}];
  for (const auto& [cell, n] : cells) CHECK(n == 25);
  o.seed = 1;
  CHECK(synth::confounded_corpus(o) != a);
  o.docs_per_domain = 3;
  CHECK_THROWS_AS(synth::confounded_corpus(o), Error);
}

TEST_CASE("names are tagged as entities by the bundled lexicon") {
  for (std::size_t g = 0; g < 4; ++g)
    for (const auto& name : synth::name_group(g)) {
      const auto tokens = tag_lexicon("Ontem " + name + " chegou", default_lexicon());
      REQUIRE(tokens.size() == 3);
      CHECK_MESSAGE(tokens[1].ner != NerTag::NONE, name);
    }
}

TEST_CASE("entity pairs differ only in vocabulary markers") {
  const auto p = synth::entity_pairs(30, 2);
  CHECK(p.pairs.size() == 30);
  CHECK(p.docs.size() == 60);
  std::set<std::string> ep_words, bp_words;
  for (const auto& [e, b] : synth::marker_pairs()) {
    ep_words.insert(e);
    bp_words.insert(b);
  }
  for (std::size_t i = 0; i < p.pairs.size(); ++i) {
    const auto ea = tokenize_words(p.docs[2 * i].text), ba = tokenize_words(p.docs[2 * i + 1].text);
    CHECK(p.pairs[i].ep_id == p.docs[2 * i].id);
    CHECK(p.pairs[i].bp_id == p.docs[2 * i + 1].id);
    REQUIRE(ea.size() == ba.size());
    for (std::size_t k = 0; k < ea.size(); ++k)
      if (ea[k] != ba[k]) {
        CHECK(ep_words.contains(ea[k]));
        CHECK(bp_words.contains(ba[k]));
      }
  }
}
