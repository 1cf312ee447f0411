#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdlvae/autoencoder.hpp"
#include "mdlvae/numerics.hpp"

namespace mdlvae {

enum class OptimizerKind { sgd, adam };

const char* to_string(OptimizerKind k) noexcept;
OptimizerKind parse_optimizer(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta = 1.0;
  ReconKind recon_kind = ReconKind::mse;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
  OptimizerKind optimizer = OptimizerKind::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  // Domain error on any out-of-range field.
  void validate() const;
};

struct EpochRecord {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double kl_mean = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  double training_seconds = 0.0;
};

struct DatasetSplit {
  Matrix train;
  Matrix val;
  std::vector<std::size_t> train_rows;  // indices into the original matrix
  std::vector<std::size_t> val_rows;
};

// Seeded shuffle, then the first round(n * val_fraction) shuffled rows become
// the validation split.
DatasetSplit split_dataset(const Matrix& x, double val_fraction, std::uint64_t seed);

// Receives the original row indices of every gradient batch.
using BatchObserver = std::function<void(std::span<const std::size_t>)>;

template <class Model>
struct TrainResult {
  Model model;
  TrainingHistory history;
};

// Mini-batch training with per-epoch monitoring on both splits. Monitoring
// passes run the VAE with epsilon = 0. Epoch e shuffles with seed + e.
TrainResult<AeModel> train(AeModel model, const Matrix& x, const TrainConfig& config,
                           const BatchObserver& observer = {});
TrainResult<VaeModel> train(VaeModel model, const Matrix& x, const TrainConfig& config,
                            const BatchObserver& observer = {});

// Header epoch,train_loss,val_loss,kl_mean,mse,mae,rmse.
std::string history_to_csv(const TrainingHistory& history);

}  // namespace mdlvae
