#include "mdlvae/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mdlvae/error.hpp"
#include "mdlvae/evaluation.hpp"
#include "text_io.hpp"

namespace mdlvae {

const char* to_string(OptimizerKind k) noexcept { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  fail(ErrorKind::parse, "unknown optimizer '" + name + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) fail(ErrorKind::domain, "batch_size must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    fail(ErrorKind::domain, "learning_rate must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta)) fail(ErrorKind::domain, "beta must be non-negative");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) fail(ErrorKind::domain, "val_fraction must lie in (0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    fail(ErrorKind::domain, "Adam decay rates must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) fail(ErrorKind::domain, "Adam epsilon must be positive");
}

DatasetSplit split_dataset(const Matrix& x, double val_fraction, std::uint64_t seed) {
  const std::size_t n = x.rows();
  if (n < 2) fail(ErrorKind::domain, "split_dataset: need at least two rows");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) fail(ErrorKind::domain, "split_dataset: fraction outside (0, 1)");
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_fraction));
  if (n_val == 0 || n_val >= n) {
    fail(ErrorKind::domain, "split_dataset: fraction " + std::to_string(val_fraction) + " of " + std::to_string(n) +
                                " rows leaves an empty split");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  DatasetSplit split;
  split.val_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  split.train = x.select_rows(split.train_rows);
  split.val = x.select_rows(split.val_rows);
  return split;
}

namespace {

struct Evaluation {
  double loss = 0.0;
  double kl = 0.0;
  Matrix reconstruction;
};

Evaluation evaluate(const AeModel& model, const Matrix& x, const TrainConfig& config) {
  auto trace = forward_ae(model, x);
  Evaluation out;
  out.loss = loss_total(x, trace.reconstruction, config.recon_kind);
  out.reconstruction = std::move(trace.reconstruction);
  return out;
}

Evaluation evaluate(const VaeModel& model, const Matrix& x, const TrainConfig& config) {
  auto trace = forward_vae(model, x, Matrix(x.rows(), model.latent_dim()));
  Evaluation out;
  out.kl = gaussian_kl(trace.mu, trace.logvar);
  out.loss = reconstruction_loss(x, trace.reconstruction, config.recon_kind) + config.beta * out.kl;
  out.reconstruction = std::move(trace.reconstruction);
  return out;
}

AeModel batch_gradients(const AeModel& model, const Matrix& xb, const TrainConfig& config, Rng&, double& loss) {
  const auto trace = forward_ae(model, xb);
  loss = loss_total(xb, trace.reconstruction, config.recon_kind);
  return backward(model, trace, xb, config.recon_kind);
}

VaeModel batch_gradients(const VaeModel& model, const Matrix& xb, const TrainConfig& config, Rng& noise,
                         double& loss) {
  const auto trace = forward_vae(model, xb, noise);
  loss = loss_total(xb, trace.reconstruction, trace.mu, trace.logvar, config.beta, config.recon_kind);
  return backward(model, trace, xb, config.beta, config.recon_kind);
}

class Optimizer {
 public:
  Optimizer(const TrainConfig& config, std::size_t parameter_count)
      : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

  template <class Model>
  void step(Model& model, const Model& grads) {
    ++t_;
    const auto params = parameter_views(model);
    const auto g = parameter_views(grads);
    const double lr = config_.learning_rate;
    if (config_.optimizer == OptimizerKind::sgd) {
      for (std::size_t b = 0; b < params.size(); ++b)
        for (std::size_t i = 0; i < params[b].size(); ++i) params[b][i] -= lr * g[b][i];
      return;
    }
    const double b1 = config_.adam_beta1;
    const double b2 = config_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    std::size_t k = 0;
    for (std::size_t b = 0; b < params.size(); ++b) {
      for (std::size_t i = 0; i < params[b].size(); ++i, ++k) {
        const double gi = g[b][i];
        m_[k] = b1 * m_[k] + (1.0 - b1) * gi;
        v_[k] = b2 * v_[k] + (1.0 - b2) * gi * gi;
        params[b][i] -= lr * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + config_.adam_epsilon);
      }
    }
  }

 private:
  const TrainConfig& config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

template <class Model>
void set_beta(Model&, double) {}
template <>
void set_beta<VaeModel>(VaeModel& m, double beta) {
  m.beta = beta;
}

template <class Model>
TrainResult<Model> train_impl(Model model, const Matrix& x, const TrainConfig& config,
                              const BatchObserver& observer) {
  config.validate();
  model.validate();
  if (x.cols() != model.input_dim()) {
    fail(ErrorKind::shape, "training data width " + std::to_string(x.cols()) + " does not match model input " +
                               std::to_string(model.input_dim()));
  }
  set_beta(model, config.beta);
  TrainResult<Model> result{std::move(model), {}};
  if (config.epochs == 0) return result;

  const auto start = std::chrono::steady_clock::now();
  const DatasetSplit split = split_dataset(x, config.val_fraction, config.seed);
  Optimizer optimizer(config, flatten_parameters(result.model).size());
  Rng noise(config.seed ^ 0xA5A5A5A5DEADBEEFULL);

  const std::size_t n_train = split.train.rows();
  std::vector<std::size_t> order(n_train);
  std::vector<std::size_t> batch_rows;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler(config.seed + epoch);
    shuffler.shuffle(order);
    for (std::size_t start_row = 0; start_row < n_train; start_row += config.batch_size) {
      const std::size_t end_row = std::min(n_train, start_row + config.batch_size);
      const std::span<const std::size_t> local(order.data() + start_row, end_row - start_row);
      if (observer) {
        batch_rows.clear();
        for (std::size_t i : local) batch_rows.push_back(split.train_rows[i]);
        observer(batch_rows);
      }
      const Matrix xb = split.train.select_rows(local);
      double loss = 0.0;
      const Model grads = batch_gradients(result.model, xb, config, noise, loss);
      if (!std::isfinite(loss)) {
        fail(ErrorKind::training, "training diverged: non-finite loss in epoch " + std::to_string(epoch + 1));
      }
      optimizer.step(result.model, grads);
    }

    const Evaluation on_train = evaluate(result.model, split.train, config);
    const Evaluation on_val = evaluate(result.model, split.val, config);
    if (!std::isfinite(on_train.loss) || !std::isfinite(on_val.loss)) {
      fail(ErrorKind::training, "training diverged: non-finite loss in epoch " + std::to_string(epoch + 1));
    }
    const ReconMetrics metrics = recon_metrics(split.val, on_val.reconstruction);
    result.history.epochs.push_back(
        {on_train.loss, on_val.loss, on_train.kl, metrics.mse, metrics.mae, metrics.rmse});
  }
  result.history.training_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace

TrainResult<AeModel> train(AeModel model, const Matrix& x, const TrainConfig& config, const BatchObserver& observer) {
  return train_impl(std::move(model), x, config, observer);
}

TrainResult<VaeModel> train(VaeModel model, const Matrix& x, const TrainConfig& config,
                            const BatchObserver& observer) {
  return train_impl(std::move(model), x, config, observer);
}

std::string history_to_csv(const TrainingHistory& history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,kl_mean,mse,mae,rmse\n";
  std::size_t epoch = 1;
  for (const auto& r : history.epochs) {
    out << epoch++ << ',' << detail::format_double(r.train_loss, 17) << ','
        << detail::format_double(r.val_loss, 17) << ',' << detail::format_double(r.kl_mean, 17) << ','
        << detail::format_double(r.mse, 17) << ',' << detail::format_double(r.mae, 17) << ','
        << detail::format_double(r.rmse, 17) << '\n';
  }
  return out.str();
}

}  // namespace mdlvae
