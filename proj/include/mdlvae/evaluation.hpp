#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mdlvae/autoencoder.hpp"
#include "mdlvae/mdl_compress.hpp"
#include "mdlvae/numerics.hpp"

namespace mdlvae {

struct ReconMetrics {
  double mse = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
};

// Element-wise over all n * d entries.
ReconMetrics recon_metrics(const Matrix& x, const Matrix& x_hat);

enum class SampleError { se, ae };

// Per-row mean squared (se) or absolute (ae) error.
Vector per_sample_errors(const Matrix& x, const Matrix& x_hat, SampleError kind);

struct TTestResult {
  double t = 0.0;
  std::size_t df = 0;
  double p_two_sided = 1.0;
  double mean_diff = 0.0;
};

// Paired test on d = a - b. Degenerate error when every difference is equal.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Four decimals; anything below 5e-5 prints as 0.0000.
std::string format_p_value(double p);

using Reconstructor = std::function<Matrix(const Matrix&)>;

struct NoiseResult {
  double nsr = 0.0;
  double noise_error = 0.0;
};

// Adds i.i.d. normal noise rescaled so its RMS equals nsr times the RMS of the
// column-centered signal, then reports the RMSE of the reconstruction against
// the clean x. nsr = 0 feeds x through unchanged.
NoiseResult noise_robustness(const Reconstructor& reconstruct, const Matrix& x, double nsr, Rng& rng);

// Mean per-sample Gaussian differential entropy in nats.
double latent_entropy(const Matrix& logvar);

// Mean silhouette coefficient, Euclidean distance; points in singleton
// clusters score 0.
double latent_silhouette(const Matrix& z, std::span<const int> labels);

struct ClassificationReport {
  std::array<std::array<std::size_t, 2>, 2> confusion{};  // [true][pred]
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Binary labels only. Precision, recall and F1 fall back to 0 when their
// denominators vanish.
ClassificationReport classification_report(std::span<const int> y_true, std::span<const int> y_pred,
                                           int positive_class = 1);

// Median wall-clock seconds over repeats of a full-batch call.
double time_inference(const Reconstructor& reconstruct, const Matrix& x, std::size_t repeats);

using Network = std::variant<AeModel, VaeModel>;

// A network plus the optional MDL projection it consumes. With a projection,
// inputs are mapped to codes first and reconstructions are mapped back to
// the original space.
struct ReconstructionModel {
  std::string label;
  Network network;
  std::optional<CompressionResult> preprocess;
  ReconKind recon_kind = ReconKind::mse;

  std::size_t input_dim() const;
  Matrix network_input(const Matrix& x) const;
  Matrix reconstruct(const Matrix& x) const;
  // Encoder output (AE) or posterior mean (VAE).
  Matrix latent(const Matrix& x) const;
  std::optional<Matrix> latent_logvar(const Matrix& x) const;
  double kl_mean(const Matrix& x) const;
  // Training objective in the network's own input space, epsilon = 0.
  double loss(const Matrix& x) const;
  Reconstructor reconstructor() const;
};

struct MetricTest {
  std::string metric;  // mse | mae | rmse
  std::optional<TTestResult> result;
  std::string status;  // "ok", or "identical" for degenerate pairs
};

struct ModelBlock {
  std::string label;
  ReconMetrics metrics;
  double kl_mean = 0.0;
  std::optional<double> train_loss;
  double test_loss = 0.0;
  std::vector<NoiseResult> noise;
  double inference_seconds = 0.0;
  std::optional<double> latent_silhouette;
  std::optional<double> latent_entropy;
};

struct ComparisonReport {
  std::array<ModelBlock, 2> models;
  std::vector<MetricTest> tests;
};

struct CompareOptions {
  std::vector<double> nsr{0.1, 0.5};
  std::uint64_t noise_seed = 7;
  std::size_t inference_repeats = 5;
};

// Metric block for one model on test rows; labels enable the silhouette.
ModelBlock evaluate_model(const ReconstructionModel& model, const Matrix& test,
                          const std::optional<std::vector<int>>& labels, const CompareOptions& options = {});

// Both models see the same test rows; t-tests pair per-sample se (MSE), ae
// (MAE) and sqrt(se) (RMSE) with model_a first.
ComparisonReport compare_models(const ReconstructionModel& model_a, const ReconstructionModel& model_b,
                                const Matrix& test, const std::optional<std::vector<int>>& labels,
                                const CompareOptions& options = {});

}  // namespace mdlvae
