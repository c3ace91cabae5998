#pragma once

#include <cstdint>
#include <vector>

#include "varid/corpus.hpp"
#include "varid/eval.hpp"

namespace varid::synth {

/// A labeled corpus where entity names are confounded with the label inside
/// each domain and point the other way in neighbouring domains, while a set
/// of EP/BP vocabulary pairs carries the real signal in every domain.
///
/// Names form four groups G0..G3. In domain k, EP documents mostly mention
/// G_k and BP documents G_(k+1 mod 4). Each document uses the EP or BP member
/// of a vocabulary pair with the given fidelity.
struct ConfoundedOptions {
  std::vector<Domain> domains{Domain::Journalistic, Domain::Literature, Domain::Legal, Domain::Politics};
  std::size_t docs_per_domain = 2000;  // split evenly between EP and BP
  double name_fidelity = 0.9;
  double marker_fidelity = 0.8;
  std::size_t min_sentences = 3;
  std::size_t max_sentences = 6;
  std::uint64_t seed = 0;
};

Corpus confounded_corpus(const ConfoundedOptions& options = {});

struct PairedSet {
  Corpus docs;
  std::vector<DocPair> pairs;
};

/// Translation-style pairs: both sides share names and sentence skeleton,
/// and differ only in which member of each vocabulary pair they use.
/// Names are drawn uniformly from all groups; bucket is "entity".
PairedSet entity_pairs(std::size_t count, std::uint64_t seed = 0);

/// The EP/BP vocabulary pairs used by both generators.
const std::vector<std::pair<std::string, std::string>>& marker_pairs();
/// Names of group g (0..3).
const std::vector<std::string>& name_group(std::size_t g);

}  // namespace varid::synth
