#include "mdlvae/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "mdlvae/error.hpp"

namespace mdlvae {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorKind::shape, std::string(what) + ": shapes " + std::to_string(a.rows()) + "x" +
                               std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                               std::to_string(b.cols()) + " differ");
  }
}

double rms_centered(const Matrix& x) {
  const Vector mean = column_means(x);
  double s = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) s += (row[j] - mean[j]) * (row[j] - mean[j]);
  }
  return x.size() == 0 ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace

ReconMetrics recon_metrics(const Matrix& x, const Matrix& x_hat) {
  check_same_shape(x, x_hat, "recon_metrics");
  if (x.size() == 0) fail(ErrorKind::domain, "recon_metrics: empty input");
  double se = 0.0;
  double ae = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x.data()[i] - x_hat.data()[i];
    se += e * e;
    ae += std::abs(e);
  }
  const double n = static_cast<double>(x.size());
  ReconMetrics m;
  m.mse = se / n;
  m.mae = ae / n;
  m.rmse = std::sqrt(m.mse);
  return m;
}

Vector per_sample_errors(const Matrix& x, const Matrix& x_hat, SampleError kind) {
  check_same_shape(x, x_hat, "per_sample_errors");
  Vector out(x.rows(), 0.0);
  if (x.cols() == 0) return out;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto a = x.row(r);
    const auto b = x_hat.row(r);
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double e = a[j] - b[j];
      s += kind == SampleError::se ? e * e : std::abs(e);
    }
    out[r] = s / static_cast<double>(a.size());
  }
  return out;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::shape, "paired_t_test: samples differ in length");
  const std::size_t n = a.size();
  if (n < 2) fail(ErrorKind::domain, "paired_t_test: need at least two pairs");
  Vector d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  if (std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); })) {
    fail(ErrorKind::degenerate, "paired_t_test: differences have zero variance");
  }
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) fail(ErrorKind::degenerate, "paired_t_test: differences have zero variance");

  TTestResult out;
  out.mean_diff = mean;
  out.df = n - 1;
  out.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  out.p_two_sided = std::clamp(2.0 * (1.0 - student_t_cdf(std::abs(out.t), static_cast<double>(out.df))), 0.0, 1.0);
  return out;
}

std::string format_p_value(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", p < 5e-5 ? 0.0 : p);
  return buf;
}

NoiseResult noise_robustness(const Reconstructor& reconstruct, const Matrix& x, double nsr, Rng& rng) {
  if (!(nsr >= 0.0) || !std::isfinite(nsr)) fail(ErrorKind::domain, "noise_robustness: nsr must be >= 0");
  NoiseResult out{nsr, 0.0};
  if (nsr == 0.0) {
    out.noise_error = recon_metrics(x, reconstruct(x)).rmse;
    return out;
  }
  Matrix noise = rng_normal_matrix(rng, x.rows(), x.cols());
  double noise_ss = 0.0;
  for (double v : noise.data()) noise_ss += v * v;
  const double noise_rms = std::sqrt(noise_ss / static_cast<double>(noise.size()));
  const double factor = noise_rms > 0.0 ? nsr * rms_centered(x) / noise_rms : 0.0;
  Matrix noisy = x;
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy.data()[i] += factor * noise.data()[i];
  out.noise_error = recon_metrics(x, reconstruct(noisy)).rmse;
  return out;
}

double latent_entropy(const Matrix& logvar) {
  if (logvar.rows() == 0) return 0.0;
  const double log_2pie = std::log(2.0 * std::numbers::pi * std::numbers::e);
  double total = 0.0;
  for (double lv : logvar.data()) {
    if (!std::isfinite(lv)) fail(ErrorKind::numeric, "latent_entropy: non-finite log-variance");
    total += 0.5 * (log_2pie + lv);
  }
  return total / static_cast<double>(logvar.rows());
}

double latent_silhouette(const Matrix& z, std::span<const int> labels) {
  const std::size_t n = z.rows();
  if (labels.size() != n) fail(ErrorKind::shape, "latent_silhouette: one label per row required");
  if (n < 3) fail(ErrorKind::domain, "latent_silhouette: need at least three points");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) fail(ErrorKind::domain, "latent_silhouette: need at least two classes");

  std::vector<std::size_t> class_of(n);
  std::vector<std::size_t> class_size(classes.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    class_of[i] = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
    ++class_size[class_of[i]];
  }

  double total = 0.0;
  std::vector<double> dist_sum(classes.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    const auto zi = z.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto zj = z.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < zi.size(); ++k) s += (zi[k] - zj[k]) * (zi[k] - zj[k]);
      dist_sum[class_of[j]] += std::sqrt(s);
    }
    const std::size_t own = class_of[i];
    if (class_size[own] == 1) continue;  // singleton contributes 0
    const double a = dist_sum[own] / static_cast<double>(class_size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes.size(); ++c) {
      if (c == own) continue;
      b = std::min(b, dist_sum[c] / static_cast<double>(class_size[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

ClassificationReport classification_report(std::span<const int> y_true, std::span<const int> y_pred,
                                           int positive_class) {
  if (y_true.size() != y_pred.size()) fail(ErrorKind::shape, "classification_report: label vectors differ in length");
  if (y_true.empty()) fail(ErrorKind::domain, "classification_report: no labels");
  if (positive_class != 0 && positive_class != 1) fail(ErrorKind::domain, "positive class must be 0 or 1");
  ClassificationReport out;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
      fail(ErrorKind::domain, "classification_report: label outside {0, 1} at index " + std::to_string(i));
    }
    ++out.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  const auto pos = static_cast<std::size_t>(positive_class);
  const auto neg = 1 - pos;
  const double tp = static_cast<double>(out.confusion[pos][pos]);
  const double fp = static_cast<double>(out.confusion[neg][pos]);
  const double fn = static_cast<double>(out.confusion[pos][neg]);
  const double n = static_cast<double>(y_true.size());
  out.accuracy = static_cast<double>(out.confusion[0][0] + out.confusion[1][1]) / n;
  out.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
  out.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  out.f1 = out.precision + out.recall > 0.0 ? 2.0 * out.precision * out.recall / (out.precision + out.recall) : 0.0;
  return out;
}

double time_inference(const Reconstructor& reconstruct, const Matrix& x, std::size_t repeats) {
  if (repeats < 1) fail(ErrorKind::domain, "time_inference: repeats must be >= 1");
  std::vector<double> seconds;
  seconds.reserve(repeats);
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    const Matrix out = reconstruct(x);
    const auto stop = std::chrono::steady_clock::now();
    seconds.push_back(std::chrono::duration<double>(stop - start).count());
    if (out.rows() != x.rows()) fail(ErrorKind::shape, "time_inference: reconstruction lost rows");
  }
  std::sort(seconds.begin(), seconds.end());
  const std::size_t mid = seconds.size() / 2;
  return seconds.size() % 2 == 1 ? seconds[mid] : 0.5 * (seconds[mid - 1] + seconds[mid]);
}

std::size_t ReconstructionModel::input_dim() const {
  if (preprocess) return preprocess->mean.size();
  return std::visit([](const auto& m) { return m.input_dim(); }, network);
}

Matrix ReconstructionModel::network_input(const Matrix& x) const {
  if (x.cols() != input_dim()) {
    fail(ErrorKind::shape, "model '" + label + "' expects width " + std::to_string(input_dim()) + ", got " +
                               std::to_string(x.cols()));
  }
  return preprocess ? project(*preprocess, x) : x;
}

namespace {

struct NetworkPass {
  Matrix reconstruction;
  Matrix latent;
  std::optional<Matrix> mu;
  std::optional<Matrix> logvar;
};

NetworkPass run_network(const Network& network, const Matrix& input) {
  if (const auto* ae = std::get_if<AeModel>(&network)) {
    auto trace = forward_ae(*ae, input);
    return {std::move(trace.reconstruction), std::move(trace.latent), std::nullopt, std::nullopt};
  }
  const auto& vae = std::get<VaeModel>(network);
  auto trace = forward_vae(vae, input, Matrix(input.rows(), vae.latent_dim()));
  NetworkPass pass{std::move(trace.reconstruction), trace.mu, std::move(trace.mu), std::move(trace.logvar)};
  return pass;
}

}  // namespace

Matrix ReconstructionModel::reconstruct(const Matrix& x) const {
  Matrix out = run_network(network, network_input(x)).reconstruction;
  return preprocess ? reconstruct_codes(*preprocess, out) : out;
}

Matrix ReconstructionModel::latent(const Matrix& x) const { return run_network(network, network_input(x)).latent; }

std::optional<Matrix> ReconstructionModel::latent_logvar(const Matrix& x) const {
  return run_network(network, network_input(x)).logvar;
}

double ReconstructionModel::kl_mean(const Matrix& x) const {
  const NetworkPass pass = run_network(network, network_input(x));
  return pass.mu ? gaussian_kl(*pass.mu, *pass.logvar) : 0.0;
}

double ReconstructionModel::loss(const Matrix& x) const {
  const Matrix input = network_input(x);
  const NetworkPass pass = run_network(network, input);
  if (pass.mu) {
    const double beta = std::get<VaeModel>(network).beta;
    return loss_total(input, pass.reconstruction, *pass.mu, *pass.logvar, beta, recon_kind);
  }
  return loss_total(input, pass.reconstruction, recon_kind);
}

Reconstructor ReconstructionModel::reconstructor() const {
  return [this](const Matrix& x) { return reconstruct(x); };
}

namespace {

ModelBlock evaluate_block(const ReconstructionModel& model, const Matrix& test, const Matrix& reconstruction,
                          const std::optional<std::vector<int>>& labels, const CompareOptions& options) {
  ModelBlock block;
  block.label = model.label;
  block.metrics = recon_metrics(test, reconstruction);
  block.kl_mean = model.kl_mean(test);
  block.test_loss = model.loss(test);
  for (std::size_t i = 0; i < options.nsr.size(); ++i) {
    Rng rng(options.noise_seed + i);
    block.noise.push_back(noise_robustness(model.reconstructor(), test, options.nsr[i], rng));
  }
  block.inference_seconds = time_inference(model.reconstructor(), test, options.inference_repeats);
  if (labels) block.latent_silhouette = latent_silhouette(model.latent(test), *labels);
  if (auto logvar = model.latent_logvar(test)) block.latent_entropy = latent_entropy(*logvar);
  return block;
}

MetricTest run_test(const std::string& metric, const Vector& a, const Vector& b) {
  MetricTest test{metric, std::nullopt, "ok"};
  try {
    test.result = paired_t_test(a, b);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate) throw;
    test.status = "identical";
  }
  return test;
}

}  // namespace

ModelBlock evaluate_model(const ReconstructionModel& model, const Matrix& test,
                          const std::optional<std::vector<int>>& labels, const CompareOptions& options) {
  if (labels && labels->size() != test.rows()) fail(ErrorKind::shape, "evaluate_model: one label per test row");
  return evaluate_block(model, test, model.reconstruct(test), labels, options);
}

ComparisonReport compare_models(const ReconstructionModel& model_a, const ReconstructionModel& model_b,
                                const Matrix& test, const std::optional<std::vector<int>>& labels,
                                const CompareOptions& options) {
  if (labels && labels->size() != test.rows()) fail(ErrorKind::shape, "compare_models: one label per test row");
  const Matrix rec_a = model_a.reconstruct(test);
  const Matrix rec_b = model_b.reconstruct(test);

  ComparisonReport report;
  report.models[0] = evaluate_block(model_a, test, rec_a, labels, options);
  report.models[1] = evaluate_block(model_b, test, rec_b, labels, options);

  const Vector se_a = per_sample_errors(test, rec_a, SampleError::se);
  const Vector se_b = per_sample_errors(test, rec_b, SampleError::se);
  const Vector ae_a = per_sample_errors(test, rec_a, SampleError::ae);
  const Vector ae_b = per_sample_errors(test, rec_b, SampleError::ae);
  Vector rse_a(se_a.size()), rse_b(se_b.size());
  std::transform(se_a.begin(), se_a.end(), rse_a.begin(), [](double v) { return std::sqrt(v); });
  std::transform(se_b.begin(), se_b.end(), rse_b.begin(), [](double v) { return std::sqrt(v); });

  report.tests.push_back(run_test("mse", se_a, se_b));
  report.tests.push_back(run_test("mae", ae_a, ae_b));
  report.tests.push_back(run_test("rmse", rse_a, rse_b));
  return report;
}

}  // namespace mdlvae
