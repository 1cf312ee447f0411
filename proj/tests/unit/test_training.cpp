#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "mdlvae/error.hpp"
#include "mdlvae/training.hpp"

using namespace mdlvae;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an mdlvae::Error");
  return ErrorKind::contract;
}

Matrix indexed_rows(std::size_t n, std::size_t d) {
  Matrix x(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) x(r, c) = static_cast<double>(r * d + c);
  return x;
}

Matrix sample(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  return rng_normal_matrix(rng, n, d);
}

TrainConfig quick(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 8;
  c.learning_rate = 1e-2;
  c.seed = 3;
  return c;
}

AeModel small_ae(std::uint64_t seed) {
  ArchitectureSpec spec;
  spec.hidden = {6};
  Rng rng(seed);
  return make_ae(4, 2, spec, rng);
}

VaeModel small_vae(std::uint64_t seed) {
  ArchitectureSpec spec;
  spec.hidden = {6};
  Rng rng(seed);
  return make_vae(4, 2, spec, 1.0, rng);
}

}  // namespace

TEST_CASE("split sizes, determinism and conservation") {
  const Matrix x = indexed_rows(10, 2);
  const auto a = split_dataset(x, 0.2, 9);
  CHECK(a.train.rows() == 8);
  CHECK(a.val.rows() == 2);
  const auto b = split_dataset(x, 0.2, 9);
  CHECK(a.train_rows == b.train_rows);
  CHECK(a.val_rows == b.val_rows);

  std::multiset<double> original(x.data().begin(), x.data().end());
  std::multiset<double> joined(a.train.data().begin(), a.train.data().end());
  joined.insert(a.val.data().begin(), a.val.data().end());
  CHECK(joined == original);
  for (std::size_t i = 0; i < a.val_rows.size(); ++i) CHECK(a.val(i, 0) == x(a.val_rows[i], 0));
}

TEST_CASE("split rejects fractions that leave a side empty") {
  const Matrix x = indexed_rows(10, 2);
  CHECK(kind_of([&] { split_dataset(x, 0.01, 1); }) == ErrorKind::domain);
  CHECK(kind_of([&] { split_dataset(x, 0.99, 1); }) == ErrorKind::domain);
  CHECK(kind_of([&] { split_dataset(x, 0.0, 1); }) == ErrorKind::domain);
  CHECK(kind_of([&] { split_dataset(indexed_rows(1, 2), 0.5, 1); }) == ErrorKind::domain);
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch_size = 0;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::domain);
  c = TrainConfig{};
  c.learning_rate = 0.0;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::domain);
  c = TrainConfig{};
  c.beta = -1.0;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::domain);
  c = TrainConfig{};
  c.val_fraction = 1.0;
  CHECK(kind_of([&] { c.validate(); }) == ErrorKind::domain);
}

TEST_CASE("zero epochs leaves parameters untouched") {
  const auto ae = small_ae(1);
  const auto r = train(ae, sample(40, 4, 2), quick(0));
  CHECK(r.history.epochs.empty());
  CHECK(flatten_parameters(r.model) == flatten_parameters(ae));

  const auto vae = small_vae(1);
  const auto v = train(vae, sample(40, 4, 2), quick(0));
  CHECK(v.history.epochs.empty());
  CHECK(flatten_parameters(v.model) == flatten_parameters(vae));
}

TEST_CASE("same seed and config give bit-identical histories") {
  const Matrix x = sample(60, 4, 5);
  const auto a = train(small_vae(2), x, quick(5));
  const auto b = train(small_vae(2), x, quick(5));
  REQUIRE(a.history.epochs.size() == 5);
  CHECK(history_to_csv(a.history) == history_to_csv(b.history));
  CHECK(flatten_parameters(a.model) == flatten_parameters(b.model));

  TrainConfig other = quick(5);
  other.seed = 4;
  CHECK(history_to_csv(train(small_vae(2), x, other).history) != history_to_csv(a.history));
}

TEST_CASE("validation rows never reach a gradient batch") {
  const Matrix x = sample(50, 4, 6);
  const TrainConfig c = quick(4);
  const auto split = split_dataset(x, c.val_fraction, c.seed);
  std::set<std::size_t> seen;
  std::size_t batches = 0;
  const BatchObserver observer = [&](std::span<const std::size_t> rows) {
    ++batches;
    seen.insert(rows.begin(), rows.end());
  };
  train(small_ae(3), x, c, observer);
  CHECK(batches > 0);
  for (std::size_t v : split.val_rows) CHECK(seen.count(v) == 0);
  CHECK(seen == std::set<std::size_t>(split.train_rows.begin(), split.train_rows.end()));
}

TEST_CASE("history records: KL sign, AE KL zero and rmse squared equals mse") {
  const Matrix x = sample(60, 4, 8);
  const auto ae = train(small_ae(4), x, quick(6));
  const auto vae = train(small_vae(4), x, quick(6));
  REQUIRE(ae.history.epochs.size() == 6);
  for (const auto& e : ae.history.epochs) {
    CHECK(e.kl_mean == 0.0);
    CHECK(std::abs(e.rmse * e.rmse - e.mse) < 1e-9);
    CHECK(std::isfinite(e.train_loss));
  }
  for (const auto& e : vae.history.epochs) {
    CHECK(e.kl_mean >= 0.0);
    CHECK(std::abs(e.rmse * e.rmse - e.mse) < 1e-9);
    CHECK(e.mae <= e.rmse + 1e-15);
  }
}

TEST_CASE("training lowers the loss on a learnable problem") {
  const Matrix x = sample(80, 4, 10);
  const auto r = train(small_ae(5), x, quick(40));
  CHECK(r.history.epochs.back().train_loss < r.history.epochs.front().train_loss);
}

TEST_CASE("divergence raises a training error naming the epoch") {
  TrainConfig c = quick(50);
  c.optimizer = OptimizerKind::sgd;
  c.learning_rate = 1e6;
  Matrix x = sample(40, 4, 11);
  for (double& v : x.data()) v *= 100.0;
  try {
    train(small_ae(6), x, c);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::training);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("history CSV layout") {
  const auto r = train(small_ae(7), sample(30, 4, 12), quick(3));
  std::istringstream in(history_to_csv(r.history));
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,train_loss,val_loss,kl_mean,mse,mae,rmse");
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
  CHECK(history_to_csv(TrainingHistory{}) == "epoch,train_loss,val_loss,kl_mean,mse,mae,rmse\n");
}

TEST_CASE("input width mismatch is a shape error") {
  CHECK(kind_of([] { train(small_ae(1), sample(20, 5, 1), quick(1)); }) == ErrorKind::shape);
}
