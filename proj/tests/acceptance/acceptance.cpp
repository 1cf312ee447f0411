#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "mdlvae/data.hpp"
#include "mdlvae/evaluation.hpp"
#include "mdlvae/experiment.hpp"
#include "mdlvae/mdl_compress.hpp"

using namespace mdlvae;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits, one block per criterion.
constexpr int kGradSeeds = 10;
constexpr double kGradMaxRelError = 1e-4;
constexpr double kGradSeconds = 30.0;

constexpr int kRankTrials = 20;
constexpr int kRankMinHits = 19;
constexpr std::size_t kRankTrue = 8;
constexpr double kRankSeconds = 60.0;

constexpr double kTTol = 1e-4;
constexpr double kPTol = 1e-3;
constexpr double kCdfTol = 1e-8;

constexpr int kMetricPairs = 100;
constexpr double kMetricTol = 1e-12;

constexpr double kLossRatio = 0.5;
constexpr double kMaxGap = 0.20;
// Monotone trend: every 10-epoch block mean is at most 1% above the one before.
constexpr std::size_t kTrendBlock = 10;
constexpr double kTrendSlack = 1.01;
constexpr double kTrainSeconds = 180.0;

constexpr double kSignificance = 0.05;
constexpr double kPipelineSeconds = 300.0;

constexpr int kIdentityMatrices = 10;
constexpr double kIdentityTol = 1e-8;

int failures = 0;

void report(int id, bool pass, const std::string& detail, double seconds) {
  std::printf("%s criterion %d: %s [%.2f s]\n", pass ? "PASS" : "FAIL", id, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

template <class Fn>
void timed(int id, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = false;
  try {
    pass = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("threw: ") + e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(id, pass, detail, s);
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool block_means_trend_down(const std::vector<double>& curve) {
  std::vector<double> means;
  for (std::size_t i = 0; i + kTrendBlock <= curve.size(); i += kTrendBlock) {
    double s = 0.0;
    for (std::size_t j = i; j < i + kTrendBlock; ++j) s += curve[j];
    means.push_back(s / static_cast<double>(kTrendBlock));
  }
  for (std::size_t i = 1; i < means.size(); ++i)
    if (means[i] > means[i - 1] * kTrendSlack) return false;
  return means.size() >= 2;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

double residual_mse(const Matrix& a, const Matrix& b) { return recon_metrics(a, b).mse; }

}  // namespace

int main() {
  timed(1, [](std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::size_t checks = 0;
    for (int seed = 0; seed < kGradSeeds; ++seed) {
      for (ReconKind kind : {ReconKind::mse, ReconKind::bce}) {
        const auto p = testing::make_grad_problem(static_cast<std::uint64_t>(seed), kind);
        worst = std::max(worst, testing::check_ae(p.ae, p.x, kind).max_relative_error);
        worst = std::max(worst, testing::check_vae(p.vae, p.x, p.epsilon, kind).max_relative_error);
        checks += 2;
      }
    }
    const double s = elapsed_since(start);
    detail = fmt("gradient check, %zu model/loss/seed cases, max relative error %.3e (limit %.0e, floor %.0e)",
                 checks, worst, kGradMaxRelError, testing::kGradFloor);
    return worst <= kGradMaxRelError && s < kGradSeconds;
  });

  timed(2, [](std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    int hits = 0, oracle_matches = 0;
    for (int trial = 0; trial < kRankTrials; ++trial) {
      SyntheticConfig cfg;
      cfg.true_rank = kRankTrue;
      cfg.n_features = 64;
      cfg.noise_sigma = 0.05;
      cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
      const Matrix x = generate_synthetic(cfg).x;
      const std::size_t k = select_rank(x);
      if (k == kRankTrue) ++hits;
      std::size_t best = 1;
      double best_total = description_length(x, 1).total_bits;
      for (std::size_t j = 2; j <= x.cols(); ++j) {
        const double t = description_length(x, j).total_bits;
        if (t < best_total) {
          best_total = t;
          best = j;
        }
      }
      if (best == k) ++oracle_matches;
    }
    const double s = elapsed_since(start);
    detail = fmt("rank 8 recovered in %d/%d trials (need %d), brute-force argmin agreement %d/%d", hits, kRankTrials,
                 kRankMinHits, oracle_matches, kRankTrials);
    return hits >= kRankMinHits && oracle_matches == kRankTrials && s < kRankSeconds;
  });

  timed(3, [](std::string& detail) {
    const Vector d{1, 2, 3}, zero{0, 0, 0};
    const auto r = paired_t_test(d, zero);
    const double cdf = student_t_cdf(1.0, 1.0);
    detail = fmt("t = %.6f (3.4641 +/- %.0e), df = %zu, p = %.6f (0.0742 +/- %.0e), cdf(1, 1) = %.10f", r.t, kTTol,
                 r.df, r.p_two_sided, kPTol, cdf);
    return std::abs(r.t - 3.4641) <= kTTol && std::abs(r.p_two_sided - 0.0742) <= kPTol && r.df == 2 &&
           std::abs(cdf - 0.75) <= kCdfTol;
  });

  timed(4, [](std::string& detail) {
    Rng rng(2024);
    double worst = 0.0;
    int invariant_failures = 0;
    for (int i = 0; i < kMetricPairs; ++i) {
      const std::size_t n = 1 + rng.uniform_index(20), dcols = 1 + rng.uniform_index(10);
      const Matrix a = rng_normal_matrix(rng, n, dcols), b = rng_normal_matrix(rng, n, dcols);
      double se = 0.0, ae = 0.0;
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < dcols; ++c) {
          const double diff = a(r, c) - b(r, c);
          se += diff * diff;
          ae += std::abs(diff);
        }
      const double count = static_cast<double>(n * dcols);
      const auto m = recon_metrics(a, b);
      worst = std::max({worst, std::abs(m.mse - se / count), std::abs(m.mae - ae / count),
                        std::abs(m.rmse - std::sqrt(se / count))});
      if (std::abs(m.rmse - std::sqrt(m.mse)) > kMetricTol || m.mae > m.rmse + kMetricTol) ++invariant_failures;
    }
    detail = fmt("%d random pairs, max deviation from loop oracle %.3e (limit %.0e), invariant violations %d",
                 kMetricPairs, worst, kMetricTol, invariant_failures);
    return worst <= kMetricTol && invariant_failures == 0;
  });

  timed(5, [](std::string& detail) {
    // The default `train` run: VAE on the raw acceptance dataset, latent size
    // from select_rank, default model spec and training config, seed 0.
    const auto start = std::chrono::steady_clock::now();
    const Matrix x = generate_synthetic(SyntheticConfig{}).x;
    auto model = build_model(ModelSpec{}, "vae", x, select_rank(x), 1.0, 0, std::nullopt);
    TrainConfig cfg;
    cfg.seed = 0;
    const auto history = train_model(model, x, cfg);
    const double s = elapsed_since(start);
    std::vector<double> train_curve, val_curve;
    for (const auto& e : history.epochs) {
      train_curve.push_back(e.train_loss);
      val_curve.push_back(e.val_loss);
    }
    const double first = train_curve.front(), last = train_curve.back();
    const double gap = std::abs(val_curve.back() - last) / last;
    const bool trend = block_means_trend_down(train_curve) && block_means_trend_down(val_curve);
    detail = fmt("%zu epochs, train loss %.4f -> %.4f (ratio %.4f, limit %.2f), final val %.4f, gap %.2f%% "
                 "(limit %.0f%%), %zu-epoch block trend %s",
                 history.epochs.size(), first, last, last / first, kLossRatio, val_curve.back(), 100.0 * gap,
                 100.0 * kMaxGap, kTrendBlock, trend ? "monotone" : "not monotone");
    return history.epochs.size() == 100 && last < kLossRatio * first && gap < kMaxGap && trend &&
           s < kTrainSeconds;
  });

  timed(6, [](std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    const auto result = run_experiment(ExperimentConfig{});
    const double s = elapsed_since(start);
    const auto& vae = result.report.models[0];
    const auto& ae = result.report.models[1];
    double p_mse = 1.0, p_rmse = 1.0, t_mse = 0.0, t_rmse = 0.0;
    for (const auto& t : result.report.tests) {
      if (!t.result) continue;
      if (t.metric == "mse") {
        p_mse = t.result->p_two_sided;
        t_mse = t.result->t;
      }
      if (t.metric == "rmse") {
        p_rmse = t.result->p_two_sided;
        t_rmse = t.result->t;
      }
    }
    const bool lower = vae.metrics.rmse < ae.metrics.rmse;
    detail = fmt("rank %zu; %s rmse %.6f vs %s rmse %.6f; mse t = %.3f p = %.3g; rmse t = %.3f p = %.3g "
                 "(need lower rmse and p < %.2f)",
                 result.rank, vae.label.c_str(), vae.metrics.rmse, ae.label.c_str(), ae.metrics.rmse, t_mse, p_mse,
                 t_rmse, p_rmse, kSignificance);
    return lower && p_mse < kSignificance && p_rmse < kSignificance && s < kPipelineSeconds;
  });

  timed(7, [](std::string& detail) {
    const std::vector<int> y(50, 0);
    const auto r = classification_report(y, y);
    detail = fmt("single-class input: accuracy %.4f, F1 %.4f", r.accuracy, r.f1);
    return r.accuracy == 1.0 && r.f1 == 0.0;
  });

  timed(8, [](std::string& detail) {
    const fs::path root = fs::temp_directory_path() / "mdlvae_acceptance_determinism";
    fs::remove_all(root);
    int codes[2];
    for (int i = 0; i < 2; ++i) {
      const fs::path out = root / (i == 0 ? "a" : "b");
      const std::string cmd = "\"" MDLVAE_CLI_PATH "\" compare --out-dir \"" + out.string() + "\" >/dev/null";
      const int status = std::system(cmd.c_str());
      codes[i] = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    const std::string a = read_text(root / "a" / "comparison.json");
    const std::string b = read_text(root / "b" / "comparison.json");
    const auto hash = [&](const char* sub) {
      return nlohmann::json::parse(read_text(root / sub / "manifest.json")).at("config_hash").get<std::string>();
    };
    const bool same_hash = codes[0] == 0 && codes[1] == 0 && hash("a") == hash("b");
    detail = fmt("two default compare runs: exit codes %d/%d, config hashes %s, comparison.json %zu bytes, %s",
                 codes[0], codes[1], same_hash ? "equal" : "differ", a.size(),
                 (!a.empty() && a == b) ? "byte-identical" : "different");
    return same_hash && !a.empty() && a == b;
  });

  timed(9, [](std::string& detail) {
    double worst = 0.0;
    int monotone_failures = 0;
    for (int i = 0; i < kIdentityMatrices; ++i) {
      Rng rng(500 + static_cast<std::uint64_t>(i));
      const std::size_t n = 10 + rng.uniform_index(30), d = 2 + rng.uniform_index(10);
      const Matrix x = rng_normal_matrix(rng, n, d);
      worst = std::max(worst, max_abs_diff(decompress(compress(x, d)), x));
      double prev = INFINITY;
      for (std::size_t k = 1; k <= d; ++k) {
        const double mse = residual_mse(x, decompress(compress(x, k)));
        if (mse > prev + 1e-12) ++monotone_failures;
        prev = mse;
      }
    }
    detail = fmt("%d random matrices, max full-rank round-trip error %.3e (limit %.0e), MSE increases %d",
                 kIdentityMatrices, worst, kIdentityTol, monotone_failures);
    return worst <= kIdentityTol && monotone_failures == 0;
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
