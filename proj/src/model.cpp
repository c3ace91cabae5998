#include "varid/model.hpp"

#include <algorithm>
#include <cmath>

#include "varid/hash.hpp"

namespace varid {

NBParameters train_nb(std::span<const SparseVector> vectors, std::span<const Label> labels, std::size_t dimension,
                      double alpha) {
  if (vectors.size() != labels.size())
    throw Error(ErrorKind::Usage, "train_nb: " + std::to_string(vectors.size()) + " vectors but " +
                                      std::to_string(labels.size()) + " labels");
  if (!(alpha > 0.0)) throw Error(ErrorKind::Usage, "train_nb: alpha must be positive");
  if (dimension == 0) throw Error(ErrorKind::Data, "train_nb: empty feature space");

  NBParameters p;
  p.alpha = alpha;
  std::array<std::vector<std::pair<std::uint32_t, double>>, 2> entries;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (!is_variety(labels[i]))
      throw Error(ErrorKind::Data, "train_nb: training labels must be EP or BP");
    const auto c = class_index(labels[i]);
    ++p.class_count[c];
    const auto& v = vectors[i];
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (v.indices[k] >= dimension) throw Error(ErrorKind::Data, "train_nb: feature index out of range");
      entries[c].emplace_back(v.indices[k], v.values[k]);
    }
  }
  if (p.class_count[0] == 0 || p.class_count[1] == 0)
    throw Error(ErrorKind::Data, "train_nb: both EP and BP documents are required");

  const double n = static_cast<double>(vectors.size());
  const double v_alpha = alpha * static_cast<double>(dimension);
  for (std::size_t c = 0; c < 2; ++c) {
    p.log_prior[c] = std::log(static_cast<double>(p.class_count[c]) / n);
    auto& e = entries[c];
    std::sort(e.begin(), e.end());
    std::vector<double> sums(dimension, 0.0);
    for (const auto& [col, value] : e) sums[col] += value;
    double total = 0.0;
    for (double s : sums) total += s;
    auto& ll = p.log_likelihood[c];
    ll.resize(dimension);
    for (std::size_t j = 0; j < dimension; ++j) ll[j] = std::log((sums[j] + alpha) / (total + v_alpha));
  }
  return p;
}

NBModel::NBModel(NBParameters params, FeatureSpace space, DelexPolicy delex, ModelMetadata metadata)
    : params_(std::move(params)), space_(std::move(space)), delex_(std::move(delex)), metadata_(std::move(metadata)) {
  for (const auto& ll : params_.log_likelihood)
    if (ll.size() != space_.dimension())
      throw Error(ErrorKind::Schema, "model: likelihood table does not match the feature space");
}

Prediction NBModel::predict(const SparseVector& v) const {
  std::array<double, 2> score = params_.log_prior;
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& ll = params_.log_likelihood[c];
    for (std::size_t k = 0; k < v.size(); ++k) score[c] += v.values[k] * ll[v.indices[k]];
  }
  const double hi = std::max(score[0], score[1]);
  const double lse = hi + std::log(std::exp(score[0] - hi) + std::exp(score[1] - hi));
  Prediction p;
  p.label = score[0] >= score[1] ? Label::EP : Label::BP;
  p.log_posterior = {score[0] - lse, score[1] - lse};
  return p;
}

NBModel train_model(std::span<const std::string> texts, std::span<const Label> labels, const FeatureConfig& features,
                    double alpha, const DelexPolicy& delex, ModelMetadata metadata) {
  auto space = fit_feature_space(texts, features);
  std::vector<SparseVector> vectors;
  vectors.reserve(texts.size());
  for (const auto& t : texts) vectors.push_back(vectorize(t, space));
  auto params = train_nb(vectors, labels, space.dimension(), alpha);
  if (metadata.corpus_fingerprint.empty()) metadata.corpus_fingerprint = space.fitted_on();
  return NBModel(std::move(params), std::move(space), delex, std::move(metadata));
}

// ---- persistence ---------------------------------------------------------------------

ordered_json to_json(const FeatureConfig& c) {
  ordered_json j;
  j["analyzer"] = std::string(to_string(c.analyzer));
  j["ngram_range"] = {c.ngram_lo, c.ngram_hi};
  j["max_features"] = c.max_features;
  j["lowercase"] = c.lowercase;
  return j;
}

FeatureConfig feature_config_from_json(const ordered_json& j) {
  FeatureConfig c;
  const auto a = parse_analyzer(j.at("analyzer").get<std::string>());
  if (!a) throw Error(ErrorKind::Schema, "unknown analyzer");
  c.analyzer = *a;
  c.ngram_lo = j.at("ngram_range").at(0).get<int>();
  c.ngram_hi = j.at("ngram_range").at(1).get<int>();
  c.max_features = j.at("max_features").get<std::size_t>();
  c.lowercase = j.at("lowercase").get<bool>();
  c.validate();
  return c;
}

namespace {

constexpr std::string_view kHashPrefix = "sha256:";

ordered_json model_body(const NBModel& m) {
  const auto& p = m.parameters();
  const auto& fs = m.feature_space();
  ordered_json j;
  j["format_version"] = kModelFormatVersion;
  ordered_json meta;
  meta["created_at"] = m.metadata().created_at;
  meta["corpus_fingerprint"] = m.metadata().corpus_fingerprint;
  meta["tool_version"] = m.metadata().tool_version;
  meta["provenance"] = m.metadata().provenance;
  j["metadata"] = std::move(meta);
  j["classes"] = {"EP", "BP"};
  j["alpha"] = p.alpha;
  j["class_count"] = {p.class_count[0], p.class_count[1]};
  j["log_prior"] = {p.log_prior[0], p.log_prior[1]};

  ordered_json space;
  auto cfg = to_json(fs.config());
  cfg["tf"] = "raw";
  cfg["idf"] = "smooth";
  cfg["norm"] = "l2";
  space["config"] = std::move(cfg);
  space["fitted_docs"] = fs.fitted_docs();
  space["fitted_on"] = fs.fitted_on();
  space["vocabulary"] = fs.terms();
  space["df"] = fs.df();
  ordered_json idf = ordered_json::array();
  for (double x : fs.idf()) idf.push_back(x);
  space["idf"] = std::move(idf);
  j["feature_space"] = std::move(space);

  ordered_json ll = ordered_json::array();
  for (const auto& row : p.log_likelihood) {
    ordered_json r = ordered_json::array();
    for (double x : row) r.push_back(x);
    ll.push_back(std::move(r));
  }
  j["log_likelihood"] = std::move(ll);
  j["delex_policy"] = to_json(m.delex_policy());
  return j;
}

int read_version(const ordered_json& j) {
  const auto it = j.find("format_version");
  if (it == j.end()) throw Error(ErrorKind::Integrity, "model artifact has no format_version");
  if (it->is_number_integer()) return it->get<int>();
  if (it->is_string()) {
    try {
      return std::stoi(it->get<std::string>());
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorKind::Integrity, "model artifact has a malformed format_version");
}

std::vector<double> doubles(const ordered_json& j) {
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(x.get<double>());
  return out;
}

}  // namespace

std::string serialize_model(const NBModel& model) {
  auto body = model_body(model);
  const auto hash = sha256_hex(dump_canonical(body));
  body["content_hash"] = std::string(kHashPrefix) + hash;
  return dump_canonical(body) + "\n";
}

NBModel deserialize_model(std::string_view bytes) {
  ordered_json j;
  try {
    j = ordered_json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Integrity, std::string("model artifact is truncated or corrupted: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::Integrity, "model artifact is not a JSON object");

  const int version = read_version(j);
  if (version != kModelFormatVersion)
    throw Error(ErrorKind::Version, "model format version " + std::to_string(version) +
                                        " is not supported by this tool (format version " +
                                        std::to_string(kModelFormatVersion) + ")");

  const auto hash_it = j.find("content_hash");
  if (hash_it == j.end() || !hash_it->is_string())
    throw Error(ErrorKind::Integrity, "model artifact has no content_hash");
  const auto stored = hash_it->get<std::string>();
  j.erase("content_hash");
  const auto actual = std::string(kHashPrefix) + sha256_hex(dump_canonical(j));
  if (stored != actual)
    throw Error(ErrorKind::Integrity, "model artifact content hash mismatch (stored " + stored + ", computed " +
                                          actual + ")");

  try {
    NBParameters p;
    p.alpha = j.at("alpha").get<double>();
    p.class_count = {j.at("class_count").at(0).get<std::size_t>(), j.at("class_count").at(1).get<std::size_t>()};
    p.log_prior = {j.at("log_prior").at(0).get<double>(), j.at("log_prior").at(1).get<double>()};
    p.log_likelihood = {doubles(j.at("log_likelihood").at(0)), doubles(j.at("log_likelihood").at(1))};

    const auto& fs = j.at("feature_space");
    FeatureSpace space(feature_config_from_json(fs.at("config")), fs.at("vocabulary").get<std::vector<std::string>>(),
                       fs.at("df").get<std::vector<std::uint64_t>>(), doubles(fs.at("idf")),
                       fs.at("fitted_docs").get<std::size_t>(), fs.at("fitted_on").get<std::string>());

    ModelMetadata meta;
    const auto& mj = j.at("metadata");
    meta.created_at = mj.at("created_at").get<std::string>();
    meta.corpus_fingerprint = mj.at("corpus_fingerprint").get<std::string>();
    meta.tool_version = mj.at("tool_version").get<std::string>();
    meta.provenance = mj.at("provenance");

    return NBModel(std::move(p), std::move(space), delex_policy_from_json(j.at("delex_policy")), std::move(meta));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("model artifact: ") + e.what());
  }
}

void save_model(const NBModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

NBModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace varid
