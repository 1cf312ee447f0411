#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "mdlvae/mdlvae.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  mdlvae_string_free(s);
  return out;
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "mdlvae_c_api_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

const char* kSmallSet = R"({"n_samples": 200, "n_features": 10, "true_rank": 2, "seed": 3})";

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(mdlvae_status_name(MDLVAE_OK)) == "ok");
  CHECK(std::string(mdlvae_status_name(MDLVAE_ERR_PARSE)) == "parse");
  CHECK(std::string(mdlvae_status_name(static_cast<mdlvae_status>(99))) == "unknown");
  CHECK(std::string(mdlvae_version()) == "0.1.0");
}

TEST_CASE("NULL arguments are rejected with a message") {
  CHECK(mdlvae_dataset_generate(nullptr, nullptr) == MDLVAE_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(mdlvae_last_error()) > 0);
  size_t rows = 0;
  CHECK(mdlvae_dataset_shape(nullptr, &rows, &rows) == MDLVAE_ERR_INVALID_ARGUMENT);
  CHECK(mdlvae_select_rank(nullptr, &rows) == MDLVAE_ERR_INVALID_ARGUMENT);
  mdlvae_dataset_free(nullptr);
  mdlvae_model_free(nullptr);
  mdlvae_string_free(nullptr);
}

TEST_CASE("error kinds map to status codes and clear on success") {
  mdlvae_dataset* ds = nullptr;
  CHECK(mdlvae_dataset_generate("{not json", &ds) == MDLVAE_ERR_PARSE);
  CHECK(ds == nullptr);
  CHECK(mdlvae_dataset_generate(R"({"true_rank": 100, "n_features": 4})", &ds) == MDLVAE_ERR_DOMAIN);
  CHECK(mdlvae_dataset_load("/nonexistent/file.csv", nullptr, &ds) == MDLVAE_ERR_IO);
  CHECK(std::string(mdlvae_last_error()).find("/nonexistent/file.csv") != std::string::npos);

  const double values[] = {1, 2, 3, 4};
  CHECK(mdlvae_dataset_from_array(values, 2, 2, &ds) == MDLVAE_OK);
  CHECK(std::string(mdlvae_last_error()).empty());
  mdlvae_compression* c = nullptr;
  CHECK(mdlvae_compress(ds, 5, &c) == MDLVAE_ERR_DOMAIN);
  mdlvae_dataset_free(ds);
}

TEST_CASE("dataset array round trip and normalization") {
  const std::vector<double> values{0, 1, 5, 3, 10, 5};
  mdlvae_dataset* ds = nullptr;
  REQUIRE(mdlvae_dataset_from_array(values.data(), 3, 2, &ds) == MDLVAE_OK);
  size_t rows = 0, cols = 0;
  CHECK(mdlvae_dataset_shape(ds, &rows, &cols) == MDLVAE_OK);
  CHECK(rows == 3);
  CHECK(cols == 2);
  std::vector<double> out(6);
  CHECK(mdlvae_dataset_copy(ds, out.data(), out.size()) == MDLVAE_OK);
  CHECK(out == values);
  CHECK(mdlvae_dataset_copy(ds, out.data(), 5) == MDLVAE_ERR_SHAPE);

  mdlvae_dataset* norm = nullptr;
  REQUIRE(mdlvae_dataset_normalize(ds, "minmax01", &norm) == MDLVAE_OK);
  CHECK(mdlvae_dataset_copy(norm, out.data(), out.size()) == MDLVAE_OK);
  CHECK(out == std::vector<double>{0, 0, 0.5, 0.5, 1, 1});
  CHECK(mdlvae_dataset_normalize(ds, "bogus", &norm) == MDLVAE_ERR_PARSE);
  mdlvae_dataset_free(norm);
  mdlvae_dataset_free(ds);
}

TEST_CASE("compression, model and history through the C API") {
  mdlvae_dataset* ds = nullptr;
  REQUIRE(mdlvae_dataset_generate(kSmallSet, &ds) == MDLVAE_OK);
  size_t rank = 0;
  REQUIRE(mdlvae_select_rank(ds, &rank) == MDLVAE_OK);
  CHECK(rank == 2);

  char* scan = nullptr;
  REQUIRE(mdlvae_dl_scan_csv(ds, &scan) == MDLVAE_OK);
  CHECK(take(scan).starts_with("k,model_bits,data_bits,total_bits\n"));

  mdlvae_compression* c = nullptr;
  REQUIRE(mdlvae_compress(ds, rank, &c) == MDLVAE_OK);
  const auto path = (temp_dir() / "compression.json").string();
  REQUIRE(mdlvae_compression_save(c, path.c_str()) == MDLVAE_OK);
  mdlvae_compression* loaded = nullptr;
  REQUIRE(mdlvae_compression_load(path.c_str(), &loaded) == MDLVAE_OK);
  double a = 0, b = 0;
  mdlvae_compression_total_bits(c, &a);
  mdlvae_compression_total_bits(loaded, &b);
  CHECK(a == b);

  mdlvae_model* model = nullptr;
  REQUIRE(mdlvae_model_create(R"({"hidden": [8]})", "vae_mdl", ds, c, rank, 1.0, 5, &model) == MDLVAE_OK);
  mdlvae_history* history = nullptr;
  REQUIRE(mdlvae_model_train(model, ds, R"({"epochs": 4, "batch_size": 16})", 1, &history) == MDLVAE_OK);
  size_t epochs = 0;
  CHECK(mdlvae_history_epochs(history, &epochs) == MDLVAE_OK);
  CHECK(epochs == 4);
  double loss = 0;
  CHECK(mdlvae_history_train_loss(history, 0, &loss) == MDLVAE_OK);
  CHECK(loss > 0.0);
  CHECK(mdlvae_history_train_loss(history, 4, &loss) == MDLVAE_ERR_LOOKUP);

  const auto model_path = (temp_dir() / "model.json").string();
  REQUIRE(mdlvae_model_save(model, model_path.c_str()) == MDLVAE_OK);
  mdlvae_model* reloaded = nullptr;
  REQUIRE(mdlvae_model_load(model_path.c_str(), &reloaded) == MDLVAE_OK);
  char* eval_a = nullptr;
  char* eval_b = nullptr;
  REQUIRE(mdlvae_model_evaluate(model, ds, "[0.1]", &eval_a) == MDLVAE_OK);
  REQUIRE(mdlvae_model_evaluate(reloaded, ds, "[0.1]", &eval_b) == MDLVAE_OK);
  auto ja = nlohmann::json::parse(take(eval_a));
  auto jb = nlohmann::json::parse(take(eval_b));
  CHECK(ja.contains("mse"));
  ja.erase("inference_seconds");
  jb.erase("inference_seconds");
  CHECK(ja == jb);

  mdlvae_dataset* recon = nullptr;
  REQUIRE(mdlvae_model_reconstruct(model, ds, &recon) == MDLVAE_OK);
  size_t rows = 0, cols = 0;
  mdlvae_dataset_shape(recon, &rows, &cols);
  CHECK(rows == 200);
  CHECK(cols == 10);

  mdlvae_dataset_free(recon);
  mdlvae_model_free(reloaded);
  mdlvae_model_free(model);
  mdlvae_history_free(history);
  mdlvae_compression_free(loaded);
  mdlvae_compression_free(c);
  mdlvae_dataset_free(ds);
}

TEST_CASE("config helpers and manifest") {
  char* h1 = nullptr;
  char* h2 = nullptr;
  REQUIRE(mdlvae_config_hash(R"({"seed": 1})", &h1) == MDLVAE_OK);
  REQUIRE(mdlvae_config_hash(R"({"seed": 1, "output_dir": "x"})", &h2) == MDLVAE_OK);
  CHECK(take(h1) == take(h2));
  CHECK(mdlvae_config_hash(R"({"bogus": 1})", &h1) == MDLVAE_ERR_PARSE);

  char* resolved = nullptr;
  REQUIRE(mdlvae_config_resolve("{}", &resolved) == MDLVAE_OK);
  CHECK(take(resolved).find("\"standard_ae\"") != std::string::npos);

  const auto dir = temp_dir() / "manifest";
  std::filesystem::create_directories(dir);
  const char* missing[] = {"nope.txt"};
  CHECK(mdlvae_manifest_write(dir.string().c_str(), "{}", 1, missing, 1, nullptr) == MDLVAE_ERR_IO);
  CHECK(mdlvae_manifest_write(dir.string().c_str(), "{}", 1, nullptr, 0, nullptr) == MDLVAE_OK);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
}
