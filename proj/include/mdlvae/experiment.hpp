#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdlvae/autoencoder.hpp"
#include "mdlvae/data.hpp"
#include "mdlvae/evaluation.hpp"
#include "mdlvae/training.hpp"

namespace mdlvae {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutDirEnv = "MDLVAE_OUT_DIR";

struct DatasetSpec {
  // Synthetic unless csv_path is set.
  SyntheticConfig synthetic;
  std::string csv_path;
  NormalizationKind normalization = NormalizationKind::none;
};

struct ModelSpec {
  std::string kind = "vae";  // "vae" | "ae"
  ArchitectureSpec architecture;
  // "auto" picks sigmoid for unstandardized inputs inside [0, 1], else linear.
  std::string output_activation = "auto";
  // Fit a fixed input/output standardization on the training inputs.
  bool standardize = true;
  // Used when the latent size is not taken from the MDL rank.
  std::size_t latent_k = 8;
};

inline ModelSpec ae_spec() {
  ModelSpec spec;
  spec.kind = "ae";
  return spec;
}

struct PipelineSpec {
  bool use_mdl_preprocess = true;
  bool latent_from_mdl = true;
};

struct EvaluationSpec {
  std::vector<double> nsr{0.1, 0.5};
  std::vector<std::string> t_test_metrics{"mse", "mae", "rmse"};
  double test_fraction = 0.2;
  std::uint64_t noise_seed = 7;
  std::size_t inference_repeats = 5;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  PipelineSpec pipeline;
  ModelSpec vae_mdl;
  ModelSpec standard_ae = ae_spec();
  TrainConfig train;
  EvaluationSpec evaluation;
  std::string output_dir;
  std::uint64_t seed = 42;

  // Domain or io error on anything unusable, including a missing CSV path.
  void validate() const;
};

// Unknown keys are rejected; missing keys keep their defaults.
ExperimentConfig config_from_json(const std::string& text);
// Single sections of the config document; an empty string yields defaults.
ModelSpec model_spec_from_json(const std::string& text, const ModelSpec& defaults = {});
TrainConfig train_config_from_json(const std::string& text, const TrainConfig& defaults = {});
SyntheticConfig synthetic_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);
// FNV-1a 64 over the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

Dataset load_experiment_dataset(const DatasetSpec& spec);

// Network sized for its inputs: raw rows, or MDL codes when preprocess is
// set. Standardization, when requested, is fitted on those inputs.
ReconstructionModel build_model(const ModelSpec& spec, const std::string& label, const Matrix& raw_train,
                                std::size_t latent_k, double beta, std::uint64_t seed,
                                std::optional<CompressionResult> preprocess, ReconKind recon_kind = ReconKind::mse);
// Trains the network on raw rows mapped through the model's preprocessing.
TrainingHistory train_model(ReconstructionModel& model, const Matrix& raw_train, const TrainConfig& config,
                            const BatchObserver& observer = {});

// Per-label seed so the two models draw from independent, fixed streams.
std::uint64_t model_seed(std::uint64_t seed, const std::string& label);

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;  // file names relative to the output dir
  std::string version = kVersion;
  std::string started_at;
  std::string finished_at;
};

std::string manifest_to_json(const RunManifest& manifest);
// FNV-1a 64 of the compact JSON dump of text, as 16 hex digits.
std::string json_hash(const std::string& json_text);

struct ExperimentResult {
  ComparisonReport report;
  std::size_t rank = 0;
  TrainingHistory vae_history;
  TrainingHistory ae_history;
  RunManifest manifest;
};

// Runs the two-model pipeline. With a non-empty output_dir it writes
// config.json, compression.json, model_<label>.json, history_<label>.csv,
// comparison.json, comparison.csv, timing.json and manifest.json there.
ExperimentResult run_experiment(const ExperimentConfig& config);

// UTC, ISO 8601, second resolution.
std::string utc_timestamp();

}  // namespace mdlvae
