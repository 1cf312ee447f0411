#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>

#include "mdlvae/mdlvae.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& root() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "mdlvae_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

RunResult run(const std::string& args, const std::string& env = "") {
  const fs::path out = root() / "stdout.txt";
  const fs::path err = root() / "stderr.txt";
  const std::string cmd = env + " \"" MDLVAE_CLI_PATH "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(out);
  r.err = read_text(err);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

fs::path small_dataset() {
  static const fs::path dir = [] {
    const fs::path d = root() / "data";
    const auto r = run("generate --n 150 --d 8 --rank 2 --seed 4 --out-dir " + q(d));
    REQUIRE(r.exit_code == 0);
    return d;
  }();
  return dir / "dataset.csv";
}

fs::path tiny_config() {
  const fs::path p = root() / "tiny.json";
  std::ofstream(p) << R"({
    "dataset": {"synthetic": {"n_samples": 150, "n_features": 8, "true_rank": 2}},
    "models": {"vae_mdl": {"hidden": [8]}, "standard_ae": {"hidden": [8]}},
    "train": {"epochs": 3, "batch_size": 16},
    "evaluation": {"inference_repeats": 1}
  })";
  return p;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  auto r = run("");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("generate") != std::string::npos);

  r = run("frobnicate");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("Usage") != std::string::npos);

  r = run("train --bogus-flag 1");
  CHECK(r.exit_code == 2);
  r = run("train --kind vae");
  CHECK(r.exit_code == 2);
}

TEST_CASE("runtime errors exit 1 with a one-line diagnostic") {
  const auto r = run("train --data /nonexistent/data.csv --out-dir " + q(root() / "never"));
  CHECK(r.exit_code == 1);
  CHECK(r.err.starts_with("error: "));
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK_FALSE(fs::exists(root() / "never"));

  const fs::path bad = root() / "bad.json";
  std::ofstream(bad) << R"({"unknown_key": 1})";
  const auto c = run("compare --config " + q(bad));
  CHECK(c.exit_code == 1);
  CHECK(c.err.find("unknown_key") != std::string::npos);
}

TEST_CASE("generate and compress write their artifacts and manifests") {
  const fs::path csv = small_dataset();
  CHECK(fs::exists(csv));
  CHECK(fs::exists(csv.parent_path() / "dataset.meta.json"));
  const json manifest = json::parse(read_text(csv.parent_path() / "manifest.json"));
  CHECK(manifest["artifacts"].size() == 3);

  const fs::path out = root() / "compress";
  const auto r = run("compress --data " + q(csv) + " --codes --out-dir " + q(out));
  REQUIRE(r.exit_code == 0);
  for (const char* name : {"compression.json", "dl_scan.csv", "codes.csv", "manifest.json"})
    CHECK(fs::exists(out / name));
  CHECK(json::parse(read_text(out / "compression.json"))["rank"] == 2);
  CHECK(read_text(out / "dl_scan.csv").starts_with("k,model_bits,data_bits,total_bits\n"));
}

TEST_CASE("train with zero epochs writes the initialization and a header-only history") {
  const fs::path csv = small_dataset();
  const fs::path out = root() / "train0";
  const auto r = run("train --data " + q(csv) + " --epochs 0 --seed 9 --out-dir " + q(out));
  REQUIRE(r.exit_code == 0);
  CHECK(read_text(out / "history_vae.csv") == "epoch,train_loss,val_loss,kl_mean,mse,mae,rmse\n");

  mdlvae_dataset* ds = nullptr;
  REQUIRE(mdlvae_dataset_load(csv.string().c_str(), nullptr, &ds) == MDLVAE_OK);
  size_t rank = 0;
  REQUIRE(mdlvae_select_rank(ds, &rank) == MDLVAE_OK);
  mdlvae_model* model = nullptr;
  REQUIRE(mdlvae_model_create(R"({"kind": "vae"})", "vae", ds, nullptr, rank, 1.0, 9, &model) == MDLVAE_OK);
  const fs::path oracle = root() / "init_model.json";
  REQUIRE(mdlvae_model_save(model, oracle.string().c_str()) == MDLVAE_OK);
  CHECK(read_text(out / "model_vae.json") == read_text(oracle));
  mdlvae_model_free(model);
  mdlvae_dataset_free(ds);
}

TEST_CASE("train then evaluate a standard autoencoder") {
  const fs::path csv = small_dataset();
  const fs::path out = root() / "train_ae";
  REQUIRE(run("train --data " + q(csv) + " --kind ae --epochs 2 --out-dir " + q(out)).exit_code == 0);
  const auto r = run("evaluate --model " + q(out / "model_ae.json") + " --data " + q(csv) + " --nsr 0.2 --out-dir " +
                     q(root() / "eval"));
  REQUIRE(r.exit_code == 0);
  const json block = json::parse(read_text(root() / "eval" / "evaluation.json"));
  CHECK(block["label"] == "ae");
  CHECK(block["noise"].size() == 1);
  CHECK(block["kl_mean"] == 0.0);
}

TEST_CASE("compare is deterministic and report leaves artifacts untouched") {
  const fs::path cfg = tiny_config();
  const fs::path a = root() / "cmp_a", b = root() / "cmp_b";
  const auto ra = run("compare --config " + q(cfg) + " --out-dir " + q(a));
  REQUIRE(ra.exit_code == 0);
  CHECK(ra.out.find("vae_mdl") != std::string::npos);
  REQUIRE(run("compare --config " + q(cfg) + " --out-dir " + q(b)).exit_code == 0);
  CHECK(read_text(a / "comparison.json") == read_text(b / "comparison.json"));
  CHECK(read_text(a / "comparison.csv") == read_text(b / "comparison.csv"));
  CHECK(read_text(a / "comparison.csv").starts_with("metric,vae_mdl,standard_ae,t,p\n"));

  const std::string before = read_text(a / "manifest.json");
  const auto rep = run("report --comparison " + q(a));
  CHECK(rep.exit_code == 0);
  CHECK(rep.out.find("rmse") != std::string::npos);
  CHECK(read_text(a / "manifest.json") == before);
  CHECK(run("report --comparison " + q(a / "comparison.json") + " --out-dir " + q(a)).exit_code == 1);
  REQUIRE(run("report --comparison " + q(a) + " --out-dir " + q(root() / "rep")).exit_code == 0);
  CHECK(fs::exists(root() / "rep" / "report.txt"));
}

TEST_CASE("flag overrides change the config hash and env sets the default output dir") {
  const fs::path cfg = tiny_config();
  const fs::path env_dir = root() / "from_env";
  REQUIRE(run("compare --config " + q(cfg) + " --epochs 2", "MDLVAE_OUT_DIR=" + q(env_dir)).exit_code == 0);
  const json m1 = json::parse(read_text(env_dir / "manifest.json"));
  const json c1 = json::parse(read_text(env_dir / "config.json"));
  CHECK(c1["train"]["epochs"] == 2);

  const fs::path flag_dir = root() / "from_flag";
  REQUIRE(run("compare --config " + q(cfg) + " --out-dir " + q(flag_dir), "MDLVAE_OUT_DIR=" + q(env_dir / "x"))
              .exit_code == 0);
  CHECK(fs::exists(flag_dir / "manifest.json"));
  CHECK_FALSE(fs::exists(env_dir / "x"));
  const json m2 = json::parse(read_text(flag_dir / "manifest.json"));
  CHECK(m1["config_hash"] != m2["config_hash"]);
}
