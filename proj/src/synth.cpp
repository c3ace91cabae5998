#include "varid/synth.hpp"

#include <functional>

#include "varid/rng.hpp"

namespace varid::synth {

namespace {

const std::vector<std::string> kPersons = {"João",   "Maria",  "Tiago",   "Rita",    "Duarte",  "Pedro",
                                           "Ana",    "Lucas",  "Júlia",   "Rafael",  "Miguel",  "Sofia",
                                           "Gabriel", "Beatriz", "Rodrigo", "Carlos", "Marta",   "Bruno",
                                           "Camila", "Fernando", "José",   "António", "Francisco", "Paulo"};
const std::vector<std::string> kPlaces = {"Lisboa", "Coimbra", "Braga",   "Recife", "Salvador", "Manaus",
                                          "Porto",  "Faro",    "Évora",   "Curitiba", "Natal",  "Belém",
                                          "Madeira", "Açores", "Bahia",   "Minas",  "Algarve",  "Sintra",
                                          "Fortaleza", "Angola", "Europa", "América", "Portugal", "Brasil"};

const std::vector<std::string> kDeterminers = {"o", "a", "um", "uma", "este", "aquele"};
const std::vector<std::string> kVerbs = {"viu",    "comprou", "encontrou", "trouxe", "pediu",   "deixou",
                                         "procurou", "levou", "mostrou",   "esqueceu", "guardou", "vendeu"};
const std::vector<std::string> kAdjectives = {"novo", "grande", "antigo", "pequeno", "bonito", "estranho", "velho"};
const std::vector<std::string> kPrepositions = {"em", "com", "para", "sem", "sobre"};
const std::vector<std::string> kOpeners = {"ontem", "depois", "hoje", "então", "logo"};

const std::vector<std::string>& topics(Domain d) {
  static const std::vector<std::string> journalistic = {"jornal", "notícia", "reportagem", "mercado",
                                                        "cidade", "empresa", "greve",    "bairro"};
  static const std::vector<std::string> literature = {"romance", "poema", "jardim", "noite",
                                                      "carta",   "sonho", "janela", "rio"};
  static const std::vector<std::string> legal = {"tribunal", "contrato", "lei",     "processo",
                                                 "artigo",   "recurso",  "sentença", "juiz"};
  static const std::vector<std::string> politics = {"parlamento", "eleição", "ministro", "partido",
                                                    "votação",    "reforma", "deputado", "orçamento"};
  static const std::vector<std::string> other = {"coisa", "dia", "lugar", "tempo", "mundo", "caso", "lado", "fim"};
  switch (d) {
    case Domain::Journalistic:
      return journalistic;
    case Domain::Literature:
      return literature;
    case Domain::Legal:
      return legal;
    case Domain::Politics:
      return politics;
    default:
      return other;
  }
}

const std::string& pick(const std::vector<std::string>& v, SplitMix64& rng) { return v[rng.below(v.size())]; }

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

struct Writer {
  SplitMix64& rng;
  const std::vector<std::string>& topic_words;
  std::function<std::string()> name;
  std::function<bool()> ep_marker;

  std::string marker() {
    const auto& pairs = marker_pairs();
    const auto& p = pairs[rng.below(pairs.size())];
    return ep_marker() ? p.first : p.second;
  }

  std::string subject() {
    if (rng.below(10) < 7) return name();
    return pick(kDeterminers, rng) + " " + pick(topic_words, rng);
  }

  std::string sentence() {
    std::string s;
    switch (rng.below(4)) {
      case 0:
        s = subject() + " " + pick(kVerbs, rng) + " " + pick(kDeterminers, rng) + " " + marker() + " " +
            pick(kAdjectives, rng) + " " + pick(kPrepositions, rng) + " " + name();
        break;
      case 1:
        s = subject() + " " + pick(kVerbs, rng) + " " + pick(kDeterminers, rng) + " " + pick(topic_words, rng) + " " +
            pick(kPrepositions, rng) + " " + pick(kDeterminers, rng) + " " + marker();
        break;
      case 2:
        s = pick(kOpeners, rng) + " , " + name() + " " + pick(kVerbs, rng) + " " + pick(kDeterminers, rng) + " " +
            marker() + " e " + pick(kDeterminers, rng) + " " + pick(topic_words, rng);
        break;
      default:
        s = subject() + " " + pick(kVerbs, rng) + " " + pick(kDeterminers, rng) + " " + pick(topic_words, rng) + " " +
            pick(kAdjectives, rng) + " " + pick(kPrepositions, rng) + " " + name();
        break;
    }
    return capitalize(std::move(s)) + " .";
  }

  std::string document(std::size_t sentences) {
    std::string text;
    for (std::size_t i = 0; i < sentences; ++i) {
      if (i > 0) text.push_back(' ');
      text += sentence();
    }
    return text;
  }
};

}  // namespace

const std::vector<std::pair<std::string, std::string>>& marker_pairs() {
  static const std::vector<std::pair<std::string, std::string>> pairs = {
      {"comboio", "trem"},           {"autocarro", "ônibus"},       {"telemóvel", "celular"},
      {"facto", "fato"},             {"registo", "registro"},       {"equipa", "equipe"},
      {"ecrã", "tela"},              {"rapariga", "moça"},          {"frigorífico", "geladeira"},
      {"sumo", "suco"},              {"talho", "açougue"},          {"miúdo", "garoto"},
      {"camisola", "camiseta"},      {"utente", "usuário"},         {"gelado", "sorvete"},
      {"relvado", "gramado"},        {"pequeno-almoço", "café-da-manhã"}, {"casa-de-banho", "banheiro"},
      {"guarda-redes", "goleiro"},   {"passadeira", "faixa"},       {"rato", "mouse"},
      {"autoestrada", "rodovia"},    {"portagem", "pedágio"},       {"apelido", "sobrenome"},
  };
  return pairs;
}

const std::vector<std::string>& name_group(std::size_t g) {
  static const auto groups = [] {
    std::vector<std::vector<std::string>> out(4);
    for (std::size_t i = 0; i < kPersons.size(); ++i) out[i % 4].push_back(kPersons[i]);
    for (std::size_t i = 0; i < kPlaces.size(); ++i) out[i % 4].push_back(kPlaces[i]);
    return out;
  }();
  return groups.at(g % 4);
}

Corpus confounded_corpus(const ConfoundedOptions& options) {
  if (options.docs_per_domain % 2 != 0) throw Error(ErrorKind::Usage, "docs_per_domain must be even");
  if (options.min_sentences == 0 || options.max_sentences < options.min_sentences)
    throw Error(ErrorKind::Usage, "invalid sentence range");
  Corpus corpus;
  corpus.reserve(options.domains.size() * options.docs_per_domain);
  for (std::size_t k = 0; k < options.domains.size(); ++k) {
    const Domain domain = options.domains[k];
    for (std::size_t i = 0; i < options.docs_per_domain; ++i) {
      const Label label = i % 2 == 0 ? Label::EP : Label::BP;
      const std::string id = std::string(to_string(domain)) + "-" + std::to_string(i);
      SplitMix64 rng(options.seed, "synth/" + id);
      const std::size_t home = label == Label::EP ? k : k + 1;
      Writer w{rng, topics(domain),
               [&]() -> std::string {
                 const bool faithful = to_unit_double(rng()) < options.name_fidelity;
                 const std::size_t g = faithful ? home : home + 1 + rng.below(3);
                 return pick(name_group(g), rng);
               },
               [&] { return (to_unit_double(rng()) < options.marker_fidelity) == (label == Label::EP); }};
      const auto n = options.min_sentences + rng.below(options.max_sentences - options.min_sentences + 1);
      Document d;
      d.id = id;
      d.text = w.document(n);
      d.domain = domain;
      d.label = label;
      d.source = "synthetic";
      corpus.push_back(std::move(d));
    }
  }
  return corpus;
}

PairedSet entity_pairs(std::size_t count, std::uint64_t seed) {
  PairedSet out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string pair_id = "entity-" + std::to_string(i);
    const SplitMix64 start(seed, "pairs/" + pair_id);
    std::array<std::string, 2> ids;
    for (std::size_t side = 0; side < 2; ++side) {
      SplitMix64 rng = start;
      Writer w{rng, topics(Domain::Unknown),
               [&]() -> std::string { return pick(name_group(rng.below(4)), rng); },
               [&] { return side == 0; }};
      Document d;
      d.id = pair_id + (side == 0 ? ":pt-PT" : ":pt-BR");
      d.text = w.document(2);
      d.label = side == 0 ? Label::EP : Label::BP;
      d.source = "synthetic/entity";
      ids[side] = d.id;
      out.docs.push_back(std::move(d));
    }
    out.pairs.push_back({pair_id, "entity", ids[0], ids[1]});
  }
  return out;
}

}  // namespace varid::synth
