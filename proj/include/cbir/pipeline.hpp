#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbir/features.hpp"
#include "cbir/irma.hpp"
#include "cbir/models.hpp"
#include "cbir/neural.hpp"
#include "cbir/retrieval.hpp"

namespace cbir::pipeline {

namespace fs = std::filesystem;

struct Paths {
  fs::path manifest;
  fs::path out_dir = "artifacts";  // models, index, inventory, metadata
  fs::path index_file;             // default: out_dir/index.cbidx
  fs::path report_dir;             // default: out_dir/reports
  std::optional<fs::path> inventory;  // branching table overriding the training codes

  fs::path index_path() const { return index_file.empty() ? out_dir / "index.cbidx" : index_file; }
  fs::path reports() const { return report_dir.empty() ? out_dir / "reports" : report_dir; }
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::size_t target_side = 256;
  features::FeatureConfig feature = features::RadonConfig{};
  // input_dim 0: derived from the feature settings; otherwise it must match.
  models::AutoencoderSpec autoencoder;
  // input_dim is always the code size; num_classes 0: number of training codes.
  models::ClassifierSpec classifier;
  bool fine_tune = false;
  nn::TrainConfig autoencoder_training;
  nn::TrainConfig classifier_training;
  nn::TrainConfig fine_tune_training;
  retrieval::RetrieveParams retrieval;
  irma::ErrorOptions irma;
  Paths paths;
  std::size_t threads = 1;

  // Length of the feature vector produced for this configuration.
  std::size_t feature_dim() const;
  // Throws ValidationError / ParameterError; never touches the filesystem.
  void validate() const;
  nlohmann::json to_json() const;
};

// Declarative JSON config; relative paths resolve against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& doc, const fs::path& base_dir = {});
PipelineConfig load_config(const fs::path& path);

struct TrainSummary {
  fs::path out_dir;
  nlohmann::json report;  // also written to out_dir/train_report.json
};

// Feature extraction -> autoencoder -> classifier over codes -> per-class
// index. Errors are rethrown as PhaseError; nothing is left in out_dir.
TrainSummary cmd_train(const PipelineConfig& config);

// Everything a query needs, loaded once from out_dir.
struct Engine {
  nlohmann::json metadata;
  nn::NeuralModel autoencoder;
  nn::NeuralModel classifier;
  retrieval::ClassIndex index;
  irma::CodeInventory inventory;
  std::vector<std::string> class_codes;  // class id -> IRMA code
  features::FeatureConfig feature;
  std::size_t target_side = 0;
  retrieval::RetrieveParams retrieval;

  // Throws StateError when artifacts are missing, ValidationError when the
  // config disagrees with the trained feature settings.
  static Engine load(const PipelineConfig& config);
};

struct QueryResult {
  std::string query;
  std::vector<double> probabilities;
  retrieval::RetrievalResult retrieval;

  nlohmann::json to_json(const Engine& engine) const;
};

QueryResult run_query(const Engine& engine, const imagecore::GrayImage& image, std::string query_id);
QueryResult cmd_query(const PipelineConfig& config, const fs::path& image_path);

// Best match for every test image, scored with the IRMA metric; writes
// evaluation.csv and evaluation.json into the report directory.
irma::ErrorReport cmd_evaluate(const PipelineConfig& config);

// Human-readable summary of the trained artifacts.
std::string cmd_inspect(const PipelineConfig& config);

}  // namespace cbir::pipeline
