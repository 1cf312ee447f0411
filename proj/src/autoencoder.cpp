#include "mdlvae/autoencoder.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "mdlvae/error.hpp"

namespace mdlvae {

const char* to_string(Activation a) noexcept {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
  }
  return "linear";
}

const char* to_string(ReconKind k) noexcept { return k == ReconKind::bce ? "bce" : "mse"; }

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "linear") return Activation::linear;
  fail(ErrorKind::parse, "unknown activation '" + name + "'");
}

ReconKind parse_recon_kind(const std::string& name) {
  if (name == "mse") return ReconKind::mse;
  if (name == "bce") return ReconKind::bce;
  fail(ErrorKind::parse, "unknown reconstruction loss '" + name + "'");
}

namespace {

constexpr double kProbClamp = 1e-12;

void apply_activation(Matrix& m, Activation a) {
  switch (a) {
    case Activation::tanh:
      for (double& v : m.data()) v = std::tanh(v);
      break;
    case Activation::sigmoid:
      for (double& v : m.data()) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::linear:
      break;
  }
}

// Multiplies grad by the activation derivative, written in terms of the
// activated output y.
void scale_by_derivative(Matrix& grad, const Matrix& y, Activation a) {
  auto g = grad.data();
  const auto out = y.data();
  switch (a) {
    case Activation::tanh:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - out[i] * out[i];
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= out[i] * (1.0 - out[i]);
      break;
    case Activation::linear:
      break;
  }
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
  Matrix y = mat_mul(x, layer.weights);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += layer.biases[j];
  }
  apply_activation(y, layer.activation);
  return y;
}

// delta is dL/d(pre-activation). Accumulates into grad and returns dL/d(input).
Matrix dense_backward(const DenseLayer& layer, const Matrix& input, const Matrix& delta, DenseLayer& grad) {
  const Matrix gw = mat_transposed_mul(input, delta);
  for (std::size_t i = 0; i < gw.size(); ++i) grad.weights.data()[i] += gw.data()[i];
  for (std::size_t r = 0; r < delta.rows(); ++r) {
    const auto row = delta.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) grad.biases[j] += row[j];
  }
  return mat_mul_transposed(delta, layer.weights);
}

void check_layer(const DenseLayer& layer) {
  if (layer.biases.size() != layer.out_dim()) fail(ErrorKind::shape, "bias length does not match layer width");
  if (layer.in_dim() == 0 || layer.out_dim() == 0) fail(ErrorKind::shape, "layer with zero width");
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) fail(ErrorKind::shape, std::string(what) + ": shapes differ");
}

// dL/d(reconstruction) for the summed-over-dims, batch-averaged losses.
Matrix reconstruction_gradient(const Matrix& x, const Matrix& recon, ReconKind kind) {
  Matrix g(x.rows(), x.cols());
  const double inv_batch = 1.0 / static_cast<double>(x.rows());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double t = x.data()[i];
    const double p = recon.data()[i];
    if (kind == ReconKind::mse) {
      g.data()[i] = 2.0 * (p - t) * inv_batch;
    } else {
      const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
      g.data()[i] = (q - t) / (q * (1.0 - q)) * inv_batch;
    }
  }
  return g;
}

void check_trace(const MlpParams& params, const MlpTrace& trace, const char* what) {
  if (trace.outputs.size() != params.layers.size() + 1) {
    fail(ErrorKind::contract, std::string(what) + " trace does not match the model's layer count");
  }
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    if (trace.outputs[i].cols() != params.layers[i].in_dim() ||
        trace.outputs[i + 1].cols() != params.layers[i].out_dim()) {
      fail(ErrorKind::contract, std::string(what) + " trace does not match the model's layer widths");
    }
  }
}

}  // namespace

std::size_t MlpParams::in_dim() const {
  if (layers.empty()) fail(ErrorKind::shape, "network has no layers");
  return layers.front().in_dim();
}

std::size_t MlpParams::out_dim() const {
  if (layers.empty()) fail(ErrorKind::shape, "network has no layers");
  return layers.back().out_dim();
}

void MlpParams::validate() const {
  if (layers.empty()) fail(ErrorKind::shape, "network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    check_layer(layers[i]);
    if (i + 1 < layers.size() && layers[i].out_dim() != layers[i + 1].in_dim()) {
      fail(ErrorKind::shape, "layer " + std::to_string(i) + " output does not chain into layer " +
                                 std::to_string(i + 1));
    }
  }
}

MlpParams init_params(std::span<const std::size_t> dims, std::span<const Activation> activations, Rng& rng,
                      double scale) {
  if (dims.size() < 2) fail(ErrorKind::domain, "init_params: need at least two layer dimensions");
  if (activations.size() != dims.size() - 1) {
    fail(ErrorKind::domain, "init_params: need one activation per layer");
  }
  MlpParams params;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t fan_in = dims[i];
    const std::size_t fan_out = dims[i + 1];
    if (fan_in == 0 || fan_out == 0) fail(ErrorKind::domain, "init_params: zero layer width");
    DenseLayer layer{rng_normal_matrix(rng, fan_in, fan_out), Vector(fan_out, 0.0), activations[i]};
    const double factor = scale / std::sqrt(static_cast<double>(fan_in));
    for (double& w : layer.weights.data()) w *= factor;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

MlpTrace mlp_forward(const MlpParams& params, const Matrix& x) {
  if (x.cols() != params.in_dim()) {
    fail(ErrorKind::shape, "input width " + std::to_string(x.cols()) + " does not match network input " +
                               std::to_string(params.in_dim()));
  }
  MlpTrace trace;
  trace.outputs.reserve(params.layers.size() + 1);
  trace.outputs.push_back(x);
  for (const auto& layer : params.layers) trace.outputs.push_back(dense_forward(layer, trace.outputs.back()));
  return trace;
}

Matrix mlp_backward(const MlpParams& params, const MlpTrace& trace, Matrix grad_output, MlpParams& grads) {
  for (std::size_t i = params.layers.size(); i-- > 0;) {
    const DenseLayer& layer = params.layers[i];
    scale_by_derivative(grad_output, trace.outputs[i + 1], layer.activation);
    grad_output = dense_backward(layer, trace.outputs[i], grad_output, grads.layers[i]);
  }
  return grad_output;
}

FeatureScaling FeatureScaling::fit(const Matrix& x) {
  if (x.rows() == 0) fail(ErrorKind::domain, "cannot fit feature scaling on an empty batch");
  FeatureScaling s;
  s.offset = column_means(x);
  s.scale.assign(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) s.scale[j] += (row[j] - s.offset[j]) * (row[j] - s.offset[j]);
  }
  for (double& v : s.scale) {
    v = std::sqrt(v / static_cast<double>(x.rows()));
    if (!(v > 0.0)) v = 1.0;
  }
  return s;
}

Matrix FeatureScaling::standardize(const Matrix& x) const {
  if (empty()) return x;
  if (x.cols() != offset.size()) fail(ErrorKind::shape, "feature scaling width does not match input");
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - offset[j]) / scale[j];
  }
  return out;
}

Matrix FeatureScaling::unstandardize(const Matrix& y) const {
  if (empty()) return y;
  if (y.cols() != offset.size()) fail(ErrorKind::shape, "feature scaling width does not match output");
  Matrix out = y;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = row[j] * scale[j] + offset[j];
  }
  return out;
}

namespace {

void check_scaling(const FeatureScaling& s, std::size_t dim) {
  if (s.empty()) return;
  if (s.offset.size() != dim || s.scale.size() != dim) fail(ErrorKind::shape, "feature scaling width does not match model");
  for (double v : s.scale)
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::domain, "feature scaling must be positive");
}

// Chain rule through unstandardize.
Matrix scale_output_gradient(const FeatureScaling& s, Matrix g) {
  if (s.empty()) return g;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    auto row = g.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] *= s.scale[j];
  }
  return g;
}

}  // namespace

void AeModel::validate() const {
  encoder.validate();
  decoder.validate();
  check_scaling(scaling, encoder.in_dim());
  if (encoder.out_dim() != decoder.in_dim()) fail(ErrorKind::shape, "encoder output does not match decoder input");
}

void VaeModel::validate() const {
  trunk.validate();
  decoder.validate();
  check_layer(mu_head);
  check_layer(logvar_head);
  if (mu_head.in_dim() != trunk.out_dim() || logvar_head.in_dim() != trunk.out_dim()) {
    fail(ErrorKind::shape, "latent heads do not match trunk output");
  }
  if (mu_head.out_dim() != logvar_head.out_dim()) fail(ErrorKind::shape, "latent heads differ in width");
  if (decoder.in_dim() != mu_head.out_dim()) fail(ErrorKind::shape, "decoder input does not match latent width");
  if (!(beta >= 0.0)) fail(ErrorKind::domain, "beta must be non-negative");
  check_scaling(scaling, trunk.in_dim());
}

AeModel make_ae(std::size_t input_dim, std::size_t latent_dim, const ArchitectureSpec& spec, Rng& rng) {
  std::vector<std::size_t> enc_dims{input_dim};
  enc_dims.insert(enc_dims.end(), spec.hidden.begin(), spec.hidden.end());
  enc_dims.push_back(latent_dim);
  std::vector<Activation> enc_acts(spec.hidden.size(), spec.hidden_activation);
  enc_acts.push_back(Activation::linear);

  std::vector<std::size_t> dec_dims(enc_dims.rbegin(), enc_dims.rend());
  std::vector<Activation> dec_acts(spec.hidden.size(), spec.hidden_activation);
  dec_acts.push_back(spec.output_activation);

  AeModel model{init_params(enc_dims, enc_acts, rng, spec.init_scale),
                init_params(dec_dims, dec_acts, rng, spec.init_scale), {}};
  model.validate();
  return model;
}

VaeModel make_vae(std::size_t input_dim, std::size_t latent_dim, const ArchitectureSpec& spec, double beta,
                  Rng& rng) {
  if (spec.hidden.empty()) fail(ErrorKind::domain, "a VAE needs at least one hidden layer");
  std::vector<std::size_t> trunk_dims{input_dim};
  trunk_dims.insert(trunk_dims.end(), spec.hidden.begin(), spec.hidden.end());
  const std::vector<Activation> trunk_acts(spec.hidden.size(), spec.hidden_activation);

  const std::size_t h = spec.hidden.back();
  const std::array<std::size_t, 2> head_dims{h, latent_dim};
  const std::array<Activation, 1> head_act{Activation::linear};

  std::vector<std::size_t> dec_dims{latent_dim};
  dec_dims.insert(dec_dims.end(), spec.hidden.rbegin(), spec.hidden.rend());
  dec_dims.push_back(input_dim);
  std::vector<Activation> dec_acts(spec.hidden.size(), spec.hidden_activation);
  dec_acts.push_back(spec.output_activation);

  VaeModel model;
  model.trunk = init_params(trunk_dims, trunk_acts, rng, spec.init_scale);
  model.mu_head = init_params(head_dims, head_act, rng, spec.init_scale).layers.front();
  model.logvar_head = init_params(head_dims, head_act, rng, spec.init_scale).layers.front();
  model.decoder = init_params(dec_dims, dec_acts, rng, spec.init_scale);
  model.beta = beta;
  model.validate();
  return model;
}

AeForwardTrace forward_ae(const AeModel& model, const Matrix& x) {
  AeForwardTrace trace;
  trace.encoder = mlp_forward(model.encoder, model.scaling.standardize(x));
  trace.latent = trace.encoder.outputs.back();
  trace.decoder = mlp_forward(model.decoder, trace.latent);
  trace.reconstruction = model.scaling.unstandardize(trace.decoder.outputs.back());
  return trace;
}

VaeForwardTrace forward_vae(const VaeModel& model, const Matrix& x, const Matrix& epsilon) {
  VaeForwardTrace trace;
  trace.trunk = mlp_forward(model.trunk, model.scaling.standardize(x));
  const Matrix& h = trace.trunk.outputs.back();
  trace.mu = dense_forward(model.mu_head, h);
  trace.logvar = dense_forward(model.logvar_head, h);
  check_same_shape(trace.mu, epsilon, "forward_vae epsilon");
  trace.epsilon = epsilon;
  trace.z = Matrix(trace.mu.rows(), trace.mu.cols());
  for (std::size_t i = 0; i < trace.z.size(); ++i) {
    trace.z.data()[i] = trace.mu.data()[i] + std::exp(0.5 * trace.logvar.data()[i]) * epsilon.data()[i];
  }
  trace.decoder = mlp_forward(model.decoder, trace.z);
  trace.reconstruction = model.scaling.unstandardize(trace.decoder.outputs.back());
  return trace;
}

VaeForwardTrace forward_vae(const VaeModel& model, const Matrix& x, Rng& rng) {
  return forward_vae(model, x, rng_normal_matrix(rng, x.rows(), model.latent_dim()));
}

double gaussian_kl(const Matrix& mu, const Matrix& logvar) {
  check_same_shape(mu, logvar, "gaussian_kl");
  if (mu.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double m = mu.data()[i];
    const double lv = logvar.data()[i];
    total += m * m + std::exp(lv) - 1.0 - lv;
  }
  return std::max(0.0, 0.5 * total / static_cast<double>(mu.rows()));
}

double reconstruction_loss(const Matrix& x, const Matrix& reconstruction, ReconKind kind) {
  check_same_shape(x, reconstruction, "reconstruction_loss");
  if (x.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = x.data()[i];
    const double p = reconstruction.data()[i];
    if (kind == ReconKind::mse) {
      total += (p - t) * (p - t);
    } else {
      if (t < 0.0 || t > 1.0 || p < 0.0 || p > 1.0) {
        fail(ErrorKind::domain, "binary cross-entropy needs inputs and reconstructions in [0, 1]");
      }
      const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
      total -= t * std::log(q) + (1.0 - t) * std::log(1.0 - q);
    }
  }
  return total / static_cast<double>(x.rows());
}

double loss_total(const Matrix& x, const Matrix& reconstruction, ReconKind kind) {
  return reconstruction_loss(x, reconstruction, kind);
}

double loss_total(const Matrix& x, const Matrix& reconstruction, const Matrix& mu, const Matrix& logvar,
                  double beta, ReconKind kind) {
  return reconstruction_loss(x, reconstruction, kind) + beta * gaussian_kl(mu, logvar);
}

AeModel backward(const AeModel& model, const AeForwardTrace& trace, const Matrix& x, ReconKind kind) {
  check_trace(model.encoder, trace.encoder, "encoder");
  check_trace(model.decoder, trace.decoder, "decoder");
  if (trace.reconstruction.rows() != x.rows() || trace.reconstruction.cols() != x.cols() ||
      trace.encoder.outputs.front().rows() != x.rows()) {
    fail(ErrorKind::contract, "forward trace was produced for a different batch");
  }
  AeModel grads = zeros_like(model);
  const Matrix g_recon = scale_output_gradient(model.scaling, reconstruction_gradient(x, trace.reconstruction, kind));
  const Matrix g_latent = mlp_backward(model.decoder, trace.decoder, g_recon, grads.decoder);
  mlp_backward(model.encoder, trace.encoder, g_latent, grads.encoder);
  return grads;
}

VaeModel backward(const VaeModel& model, const VaeForwardTrace& trace, const Matrix& x, double beta,
                  ReconKind kind) {
  check_trace(model.trunk, trace.trunk, "trunk");
  check_trace(model.decoder, trace.decoder, "decoder");
  if (trace.reconstruction.rows() != x.rows() || trace.reconstruction.cols() != x.cols() ||
      trace.trunk.outputs.front().rows() != x.rows() || trace.mu.cols() != model.latent_dim() ||
      trace.epsilon.rows() != x.rows()) {
    fail(ErrorKind::contract, "forward trace was produced for a different batch or model");
  }
  VaeModel grads = zeros_like(model);
  const double inv_batch = 1.0 / static_cast<double>(x.rows());

  const Matrix g_recon = scale_output_gradient(model.scaling, reconstruction_gradient(x, trace.reconstruction, kind));
  const Matrix g_z = mlp_backward(model.decoder, trace.decoder, g_recon, grads.decoder);

  // z = mu + exp(logvar / 2) * eps; KL adds beta * mu and beta * (exp(logvar) - 1) / 2.
  Matrix g_mu(g_z.rows(), g_z.cols());
  Matrix g_logvar(g_z.rows(), g_z.cols());
  for (std::size_t i = 0; i < g_z.size(); ++i) {
    const double lv = trace.logvar.data()[i];
    const double sigma = std::exp(0.5 * lv);
    g_mu.data()[i] = g_z.data()[i] + beta * trace.mu.data()[i] * inv_batch;
    g_logvar.data()[i] = g_z.data()[i] * trace.epsilon.data()[i] * 0.5 * sigma +
                         beta * 0.5 * (sigma * sigma - 1.0) * inv_batch;
  }

  const Matrix& h = trace.trunk.outputs.back();
  Matrix g_h = dense_backward(model.mu_head, h, g_mu, grads.mu_head);
  const Matrix g_h_lv = dense_backward(model.logvar_head, h, g_logvar, grads.logvar_head);
  for (std::size_t i = 0; i < g_h.size(); ++i) g_h.data()[i] += g_h_lv.data()[i];
  mlp_backward(model.trunk, trace.trunk, g_h, grads.trunk);
  return grads;
}

namespace {

template <class Span, class Layer>
void push_layer(std::vector<Span>& out, Layer& layer) {
  out.emplace_back(layer.weights.data());
  out.emplace_back(layer.biases);
}

template <class Span, class Mlp>
void push_mlp(std::vector<Span>& out, Mlp& mlp) {
  for (auto& layer : mlp.layers) push_layer(out, layer);
}

}  // namespace

std::vector<std::span<double>> parameter_views(AeModel& model) {
  std::vector<std::span<double>> out;
  push_mlp(out, model.encoder);
  push_mlp(out, model.decoder);
  return out;
}

std::vector<std::span<double>> parameter_views(VaeModel& model) {
  std::vector<std::span<double>> out;
  push_mlp(out, model.trunk);
  push_layer(out, model.mu_head);
  push_layer(out, model.logvar_head);
  push_mlp(out, model.decoder);
  return out;
}

std::vector<std::span<const double>> parameter_views(const AeModel& model) {
  std::vector<std::span<const double>> out;
  push_mlp(out, model.encoder);
  push_mlp(out, model.decoder);
  return out;
}

std::vector<std::span<const double>> parameter_views(const VaeModel& model) {
  std::vector<std::span<const double>> out;
  push_mlp(out, model.trunk);
  push_layer(out, model.mu_head);
  push_layer(out, model.logvar_head);
  push_mlp(out, model.decoder);
  return out;
}

}  // namespace mdlvae
