#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mdlvae/error.hpp"
#include "mdlvae/numerics.hpp"

namespace mdlvae {

enum class Activation { tanh, sigmoid, linear };
enum class ReconKind { mse, bce };

const char* to_string(Activation a) noexcept;
const char* to_string(ReconKind k) noexcept;
Activation parse_activation(const std::string& name);
ReconKind parse_recon_kind(const std::string& name);

// y = act(x * W + b); W is in_dim x out_dim, batches are row-major.
struct DenseLayer {
  Matrix weights;
  Vector biases;
  Activation activation = Activation::linear;

  std::size_t in_dim() const noexcept { return weights.rows(); }
  std::size_t out_dim() const noexcept { return weights.cols(); }
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  // Shape error unless every layer chains into the next and biases match.
  void validate() const;
};

// dims has one more entry than activations. Weights are i.i.d. normal times
// scale / sqrt(fan_in); biases start at zero.
MlpParams init_params(std::span<const std::size_t> dims, std::span<const Activation> activations, Rng& rng,
                      double scale = 1.0);

// outputs[0] is the input batch, outputs[i + 1] the activated output of layer i.
struct MlpTrace {
  std::vector<Matrix> outputs;
};

MlpTrace mlp_forward(const MlpParams& params, const Matrix& x);
// Accumulates parameter gradients into grads and returns dL/d(input).
Matrix mlp_backward(const MlpParams& params, const MlpTrace& trace, Matrix grad_output, MlpParams& grads);

// Fixed per-feature standardization wrapped around a network: inputs enter
// as (x - offset) / scale and outputs leave as y * scale + offset, so losses
// stay in data units. Empty means identity. Not trained.
struct FeatureScaling {
  Vector offset;
  Vector scale;

  bool empty() const noexcept { return offset.empty(); }
  // Column means and population standard deviations (0 maps to 1).
  static FeatureScaling fit(const Matrix& x);
  Matrix standardize(const Matrix& x) const;
  Matrix unstandardize(const Matrix& y) const;
};

struct AeModel {
  MlpParams encoder;  // d -> ... -> k
  MlpParams decoder;  // k -> ... -> d
  FeatureScaling scaling;

  std::size_t input_dim() const { return encoder.in_dim(); }
  std::size_t latent_dim() const { return encoder.out_dim(); }
  void validate() const;
};

struct VaeModel {
  MlpParams trunk;  // d -> ... -> h
  DenseLayer mu_head;      // h -> k, linear
  DenseLayer logvar_head;  // h -> k, linear
  MlpParams decoder;       // k -> ... -> d
  double beta = 1.0;
  FeatureScaling scaling;

  std::size_t input_dim() const { return trunk.in_dim(); }
  std::size_t latent_dim() const { return mu_head.out_dim(); }
  void validate() const;
};

struct ArchitectureSpec {
  std::vector<std::size_t> hidden{64};
  Activation hidden_activation = Activation::tanh;
  Activation output_activation = Activation::linear;
  double init_scale = 1.0;
};

// Encoder d -> hidden... -> k (linear latent), decoder mirrors it.
AeModel make_ae(std::size_t input_dim, std::size_t latent_dim, const ArchitectureSpec& spec, Rng& rng);
// Needs at least one hidden layer for the shared trunk.
VaeModel make_vae(std::size_t input_dim, std::size_t latent_dim, const ArchitectureSpec& spec, double beta,
                  Rng& rng);

struct AeForwardTrace {
  Matrix reconstruction;
  Matrix latent;
  MlpTrace encoder;
  MlpTrace decoder;
};

AeForwardTrace forward_ae(const AeModel& model, const Matrix& x);

struct VaeForwardTrace {
  Matrix mu;
  Matrix logvar;
  Matrix epsilon;
  Matrix z;  // mu + exp(0.5 * logvar) * epsilon
  Matrix reconstruction;
  MlpTrace trunk;
  MlpTrace decoder;
};

VaeForwardTrace forward_vae(const VaeModel& model, const Matrix& x, Rng& rng);
VaeForwardTrace forward_vae(const VaeModel& model, const Matrix& x, const Matrix& epsilon);

// Mean over the batch of 0.5 * sum_j (mu^2 + exp(logvar) - 1 - logvar).
double gaussian_kl(const Matrix& mu, const Matrix& logvar);

// Sum over dimensions, mean over the batch. BCE needs both arguments in
// [0, 1]; predictions are clamped to [1e-12, 1 - 1e-12] inside the logs.
double reconstruction_loss(const Matrix& x, const Matrix& reconstruction, ReconKind kind);
double loss_total(const Matrix& x, const Matrix& reconstruction, ReconKind kind);
double loss_total(const Matrix& x, const Matrix& reconstruction, const Matrix& mu, const Matrix& logvar,
                  double beta, ReconKind kind);

// Gradients come back in a model of identical shape.
AeModel backward(const AeModel& model, const AeForwardTrace& trace, const Matrix& x, ReconKind kind);
VaeModel backward(const VaeModel& model, const VaeForwardTrace& trace, const Matrix& x, double beta,
                  ReconKind kind);

// Weights then biases, layer by layer in forward order (VAE: trunk, mu head,
// logvar head, decoder).
std::vector<std::span<double>> parameter_views(AeModel& model);
std::vector<std::span<double>> parameter_views(VaeModel& model);
std::vector<std::span<const double>> parameter_views(const AeModel& model);
std::vector<std::span<const double>> parameter_views(const VaeModel& model);

template <class Model>
Vector flatten_parameters(const Model& model) {
  Vector out;
  for (auto view : parameter_views(model)) out.insert(out.end(), view.begin(), view.end());
  return out;
}

template <class Model>
void assign_parameters(Model& model, std::span<const double> values) {
  auto views = parameter_views(model);
  std::size_t total = 0;
  for (auto view : views) total += view.size();
  if (total != values.size()) fail(ErrorKind::shape, "parameter vector length does not match model");
  std::size_t offset = 0;
  for (auto view : views)
    for (double& v : view) v = values[offset++];
}

template <class Model>
Model zeros_like(const Model& model) {
  Model out = model;
  for (auto view : parameter_views(out))
    for (double& v : view) v = 0.0;
  return out;
}

}  // namespace mdlvae
