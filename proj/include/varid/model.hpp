#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "varid/features.hpp"
#include "varid/json_util.hpp"
#include "varid/tagging.hpp"

namespace varid {

inline constexpr int kModelFormatVersion = 1;

/// Per-class sufficient statistics and the smoothed estimates derived from them.
struct NBParameters {
  std::array<double, 2> log_prior{};
  std::array<std::vector<double>, 2> log_likelihood;  // [class][column]
  std::array<std::size_t, 2> class_count{};
  double alpha = 1.0;
};

/// log_prior_c = ln(n_c / n);
/// log_likelihood_cj = ln((S_cj + alpha) / (S_c + alpha V)) with S_cj the summed
/// value of column j over class-c vectors. Column sums are accumulated in
/// sorted order, so the result does not depend on document order.
NBParameters train_nb(std::span<const SparseVector> vectors, std::span<const Label> labels, std::size_t dimension,
                      double alpha = 1.0);

struct ModelMetadata {
  std::string created_at;
  std::string corpus_fingerprint;
  std::string tool_version = std::string(kToolVersion);
  /// Free-form provenance (domains, seeds, sweep point, ...).
  ordered_json provenance = ordered_json::object();
};

struct Prediction {
  Label label = Label::EP;
  std::array<double, 2> log_posterior{};  // normalised, EP then BP
};

class NBModel {
 public:
  NBModel() = default;
  NBModel(NBParameters params, FeatureSpace space, DelexPolicy delex, ModelMetadata metadata);

  const NBParameters& parameters() const { return params_; }
  const FeatureSpace& feature_space() const { return space_; }
  const DelexPolicy& delex_policy() const { return delex_; }
  const ModelMetadata& metadata() const { return metadata_; }
  ModelMetadata& metadata() { return metadata_; }

  /// Ties go to EP. An empty vector is scored by the priors alone.
  Prediction predict(const SparseVector& v) const;
  Prediction predict_text(std::string_view text) const { return predict(vectorize(text, space_)); }

 private:
  NBParameters params_;
  FeatureSpace space_;
  DelexPolicy delex_;
  ModelMetadata metadata_;
};

/// Vectorizes `texts`, fits the feature space on them and trains NB.
NBModel train_model(std::span<const std::string> texts, std::span<const Label> labels, const FeatureConfig& features,
                    double alpha, const DelexPolicy& delex, ModelMetadata metadata = {});

/// Versioned JSON artifact with a SHA-256 content hash.
std::string serialize_model(const NBModel& model);
NBModel deserialize_model(std::string_view bytes);
void save_model(const NBModel& model, const std::filesystem::path& path);
NBModel load_model(const std::filesystem::path& path);

ordered_json to_json(const FeatureConfig& c);
FeatureConfig feature_config_from_json(const ordered_json& j);

}  // namespace varid
