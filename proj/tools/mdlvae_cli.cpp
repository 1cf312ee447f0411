#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdlvae/mdlvae.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(mdlvae_status status) {
  if (status != MDLVAE_OK) {
    throw RuntimeFailure(std::string(mdlvae_status_name(status)) + " error: " + mdlvae_last_error());
  }
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using DatasetPtr = std::unique_ptr<mdlvae_dataset, Deleter<mdlvae_dataset, mdlvae_dataset_free>>;
using CompressionPtr = std::unique_ptr<mdlvae_compression, Deleter<mdlvae_compression, mdlvae_compression_free>>;
using ModelPtr = std::unique_ptr<mdlvae_model, Deleter<mdlvae_model, mdlvae_model_free>>;
using HistoryPtr = std::unique_ptr<mdlvae_history, Deleter<mdlvae_history, mdlvae_history_free>>;
using EmbeddingsPtr = std::unique_ptr<mdlvae_embeddings, Deleter<mdlvae_embeddings, mdlvae_embeddings_free>>;

std::string take(char* s) {
  std::string out = s ? s : "";
  mdlvae_string_free(s);
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("io error: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw RuntimeFailure("io error: cannot write '" + path.string() + "'");
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw RuntimeFailure("parse error: " + path + ": " + e.what());
  }
}

std::string resolve_out_dir(const std::string& flag, const std::string& from_config = {}) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv("MDLVAE_OUT_DIR"); env && *env) return env;
  return "mdlvae_out";
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("io error: cannot create '" + dir + "': " + ec.message());
  return fs::path(dir);
}

void write_manifest(const fs::path& dir, const json& params, std::uint64_t seed, const std::vector<std::string>& files,
                    const std::string& started) {
  std::vector<const char*> names;
  for (const auto& f : files) names.push_back(f.c_str());
  check(mdlvae_manifest_write(dir.string().c_str(), params.dump().c_str(), seed, names.data(), names.size(),
                              started.c_str()));
}

std::string now() {
  char* s = nullptr;
  check(mdlvae_timestamp(&s));
  return take(s);
}

DatasetPtr load_data(const std::string& path) {
  mdlvae_dataset* ds = nullptr;
  check(mdlvae_dataset_load(path.c_str(), nullptr, &ds));
  return DatasetPtr(ds);
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string config;
  std::optional<std::size_t> n, d, rank, classes;
  std::optional<double> sigma, separation;
  std::optional<std::uint64_t> seed;
  std::string normalize = "none";
  std::string out_dir;
};

int run_generate(const GenerateArgs& a) {
  const std::string started = now();
  json synthetic = a.config.empty() ? json::object() : parse_json_file(a.config);
  if (synthetic.contains("dataset")) synthetic = synthetic["dataset"].value("synthetic", json::object());
  if (a.n) synthetic["n_samples"] = *a.n;
  if (a.d) synthetic["n_features"] = *a.d;
  if (a.rank) synthetic["true_rank"] = *a.rank;
  if (a.classes) synthetic["n_classes"] = *a.classes;
  if (a.sigma) synthetic["noise_sigma"] = *a.sigma;
  if (a.separation) synthetic["class_separation"] = *a.separation;
  if (a.seed) synthetic["seed"] = *a.seed;

  mdlvae_dataset* raw = nullptr;
  check(mdlvae_dataset_generate(synthetic.dump().c_str(), &raw));
  DatasetPtr ds(raw);
  if (a.normalize != "none") {
    mdlvae_dataset* norm = nullptr;
    check(mdlvae_dataset_normalize(ds.get(), a.normalize.c_str(), &norm));
    ds.reset(norm);
  }
  const fs::path dir = prepare_dir(resolve_out_dir(a.out_dir));
  check(mdlvae_dataset_save(ds.get(), (dir / "dataset.csv").string().c_str(), nullptr));
  const json params = {{"command", "generate"}, {"synthetic", synthetic}, {"normalize", a.normalize}};
  write_manifest(dir, params, synthetic.value("seed", std::uint64_t{42}), {"dataset.csv", "dataset.meta.json"},
                 started);
  std::printf("wrote %s\n", (dir / "dataset.csv").string().c_str());
  return 0;
}

// ---------------------------------------------------------------- compress

struct CompressArgs {
  std::string data;
  std::string embeddings;
  std::optional<std::size_t> rank;
  bool codes = false;
  std::string out_dir;
};

int run_compress(const CompressArgs& a) {
  const std::string started = now();
  DatasetPtr ds;
  if (!a.embeddings.empty()) {
    mdlvae_embeddings* table = nullptr;
    check(mdlvae_embeddings_load(a.embeddings.c_str(), &table));
    EmbeddingsPtr owned(table);
    mdlvae_dataset* raw = nullptr;
    check(mdlvae_embeddings_as_dataset(table, &raw));
    ds.reset(raw);
  } else {
    ds = load_data(a.data);
  }
  std::size_t rank = 0;
  if (a.rank) rank = *a.rank;
  else check(mdlvae_select_rank(ds.get(), &rank));

  mdlvae_compression* raw = nullptr;
  check(mdlvae_compress(ds.get(), rank, &raw));
  CompressionPtr c(raw);
  char* scan = nullptr;
  check(mdlvae_dl_scan_csv(ds.get(), &scan));
  const std::string scan_csv = take(scan);

  const fs::path dir = prepare_dir(resolve_out_dir(a.out_dir));
  std::vector<std::string> files{"compression.json", "dl_scan.csv"};
  check(mdlvae_compression_save(c.get(), (dir / files[0]).string().c_str()));
  write_text(dir / files[1], scan_csv);
  if (a.codes) {
    files.push_back("codes.csv");
    check(mdlvae_compression_save_codes(c.get(), (dir / "codes.csv").string().c_str()));
  }
  double bits = 0.0;
  check(mdlvae_compression_total_bits(c.get(), &bits));
  const json params = {{"command", "compress"}, {"data", a.data}, {"embeddings", a.embeddings},
                       {"rank", a.rank ? json(*a.rank) : json(nullptr)}, {"codes", a.codes}};
  write_manifest(dir, params, 0, files, started);
  std::printf("rank %zu, total %.6g bits\n", rank, bits);
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string kind = "vae";
  std::string label;
  std::string compression;
  std::string spec;
  std::optional<std::size_t> latent;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> lr, beta, val_fraction;
  std::optional<std::string> recon, optimizer;
  std::optional<bool> standardize;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int run_train(const TrainArgs& a) {
  const std::string started = now();
  DatasetPtr ds = load_data(a.data);
  CompressionPtr comp;
  if (!a.compression.empty()) {
    mdlvae_compression* raw = nullptr;
    check(mdlvae_compression_load(a.compression.c_str(), &raw));
    comp.reset(raw);
  }
  std::size_t latent = 0;
  if (a.latent) latent = *a.latent;
  else if (comp) check(mdlvae_compression_rank(comp.get(), &latent));
  else check(mdlvae_select_rank(ds.get(), &latent));

  json spec = a.spec.empty() ? json::object() : parse_json_file(a.spec);
  spec["kind"] = a.kind;
  if (a.standardize) spec["standardize"] = *a.standardize;
  json train = json::object();
  if (a.epochs) train["epochs"] = *a.epochs;
  if (a.batch_size) train["batch_size"] = *a.batch_size;
  if (a.lr) train["learning_rate"] = *a.lr;
  if (a.beta) train["beta"] = *a.beta;
  if (a.val_fraction) train["val_fraction"] = *a.val_fraction;
  if (a.recon) train["recon_kind"] = *a.recon;
  if (a.optimizer) train["optimizer"] = *a.optimizer;
  const double beta = a.beta.value_or(1.0);
  const std::string label = a.label.empty() ? a.kind : a.label;

  mdlvae_model* raw_model = nullptr;
  check(mdlvae_model_create(spec.dump().c_str(), label.c_str(), ds.get(), comp.get(), latent, beta, a.seed,
                            &raw_model));
  ModelPtr model(raw_model);
  mdlvae_history* raw_hist = nullptr;
  check(mdlvae_model_train(model.get(), ds.get(), train.dump().c_str(), a.seed, &raw_hist));
  HistoryPtr history(raw_hist);
  char* csv = nullptr;
  check(mdlvae_history_csv(history.get(), &csv));
  const std::string history_csv = take(csv);

  const fs::path dir = prepare_dir(resolve_out_dir(a.out_dir));
  const std::vector<std::string> files{"model_" + label + ".json", "history_" + label + ".csv"};
  check(mdlvae_model_save(model.get(), (dir / files[0]).string().c_str()));
  write_text(dir / files[1], history_csv);
  const json params = {{"command", "train"}, {"data", a.data},   {"compression", a.compression},
                       {"label", label},     {"latent_k", latent}, {"model", spec},
                       {"train", train}};
  write_manifest(dir, params, a.seed, files, started);

  std::size_t epochs = 0;
  check(mdlvae_history_epochs(history.get(), &epochs));
  if (epochs > 0) {
    double first = 0.0, last = 0.0;
    check(mdlvae_history_train_loss(history.get(), 0, &first));
    check(mdlvae_history_train_loss(history.get(), epochs - 1, &last));
    std::printf("%s: %zu epochs, train loss %.6g -> %.6g\n", label.c_str(), epochs, first, last);
  } else {
    std::printf("%s: no training epochs, wrote initial model\n", label.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string model;
  std::string data;
  std::vector<double> nsr{0.1, 0.5};
  std::string out_dir;
};

int run_evaluate(const EvaluateArgs& a) {
  const std::string started = now();
  mdlvae_model* raw = nullptr;
  check(mdlvae_model_load(a.model.c_str(), &raw));
  ModelPtr model(raw);
  DatasetPtr ds = load_data(a.data);
  char* out = nullptr;
  check(mdlvae_model_evaluate(model.get(), ds.get(), json(a.nsr).dump().c_str(), &out));
  const std::string block = take(out);
  const fs::path dir = prepare_dir(resolve_out_dir(a.out_dir));
  write_text(dir / "evaluation.json", block);
  const json params = {{"command", "evaluate"}, {"model", a.model}, {"data", a.data}, {"nsr", a.nsr}};
  write_manifest(dir, params, 0, {"evaluation.json"}, started);
  std::fputs(block.c_str(), stdout);
  return 0;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> lr, beta;
  std::optional<std::string> data, normalize;
  std::optional<bool> mdl_preprocess, latent_from_mdl;
};

int run_compare(const CompareArgs& a) {
  json cfg = a.config.empty() ? json::object() : parse_json_file(a.config);
  if (!cfg.is_object()) throw RuntimeFailure("parse error: config must be a JSON object");
  if (a.seed) cfg["seed"] = *a.seed;
  if (a.epochs) cfg["train"]["epochs"] = *a.epochs;
  if (a.batch_size) cfg["train"]["batch_size"] = *a.batch_size;
  if (a.lr) cfg["train"]["learning_rate"] = *a.lr;
  if (a.beta) cfg["train"]["beta"] = *a.beta;
  if (a.data) cfg["dataset"]["csv_path"] = *a.data;
  if (a.normalize) cfg["dataset"]["normalization"] = *a.normalize;
  if (a.mdl_preprocess) cfg["pipeline"]["use_mdl_preprocess"] = *a.mdl_preprocess;
  if (a.latent_from_mdl) cfg["pipeline"]["latent_from_mdl"] = *a.latent_from_mdl;
  const std::string dir = resolve_out_dir(a.out_dir, cfg.value("output_dir", std::string()));
  cfg["output_dir"] = dir;

  char* manifest = nullptr;
  check(mdlvae_experiment_run(cfg.dump().c_str(), dir.c_str(), &manifest));
  take(manifest);
  char* text = nullptr;
  check(mdlvae_report_render(read_text((fs::path(dir) / "comparison.json").string()).c_str(), &text));
  std::fputs(take(text).c_str(), stdout);
  std::printf("artifacts in %s\n", dir.c_str());
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string comparison;
  std::string out_dir;
};

int run_report(const ReportArgs& a) {
  const std::string started = now();
  fs::path source(a.comparison);
  if (fs::is_directory(source)) source /= "comparison.json";
  char* text = nullptr;
  check(mdlvae_report_render(read_text(source.string()).c_str(), &text));
  const std::string rendered = take(text);
  if (!a.out_dir.empty()) {
    std::error_code ec;
    if (fs::exists(a.out_dir) && fs::equivalent(fs::path(a.out_dir), source.parent_path().empty() ? "." : source.parent_path(), ec)) {
      throw RuntimeFailure("io error: report output must not go into the directory holding the comparison");
    }
    const fs::path dir = prepare_dir(a.out_dir);
    write_text(dir / "report.txt", rendered);
    const json params = {{"command", "report"}, {"comparison", source.string()}};
    write_manifest(dir, params, 0, {"report.txt"}, started);
  }
  std::fputs(rendered.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MDL-compressed VAE versus standard autoencoder toolkit"};
  app.set_version_flag("--version", mdlvae_version());
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a seeded synthetic low-rank dataset (CSV + sidecar)");
  g->add_option("--config", gen.config, "JSON with synthetic settings");
  g->add_option("--n", gen.n, "rows");
  g->add_option("--d", gen.d, "features");
  g->add_option("--rank", gen.rank, "true latent rank");
  g->add_option("--sigma", gen.sigma, "noise standard deviation");
  g->add_option("--classes", gen.classes, "number of classes");
  g->add_option("--separation", gen.separation, "class separation along the first factor");
  g->add_option("--seed", gen.seed, "generator seed");
  g->add_option("--normalize", gen.normalize, "none | minmax01 | zscore")
      ->check(CLI::IsMember({"none", "minmax01", "zscore"}));
  g->add_option("--out-dir", gen.out_dir, "output directory");

  CompressArgs comp;
  auto* c = app.add_subcommand("compress", "Select the MDL rank and compress a dataset or embedding table");
  auto* src_data = c->add_option("--data", comp.data, "dataset CSV");
  auto* src_emb = c->add_option("--embeddings", comp.embeddings, "embedding table (.json or .csv)");
  src_data->excludes(src_emb);
  c->add_option("--rank", comp.rank, "fixed rank instead of the MDL choice")->check(CLI::PositiveNumber);
  c->add_flag("--codes", comp.codes, "also write codes.csv");
  c->add_option("--out-dir", comp.out_dir, "output directory");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one model and write its JSON and history CSV");
  t->add_option("--data", tr.data, "dataset CSV")->required();
  t->add_option("--kind", tr.kind, "vae | ae")->check(CLI::IsMember({"vae", "ae"}));
  t->add_option("--label", tr.label, "model label used in file names");
  t->add_option("--compression", tr.compression, "compression JSON; the network then consumes MDL codes");
  t->add_option("--spec", tr.spec, "model spec JSON");
  t->add_option("--latent", tr.latent, "latent size (default: compression rank or MDL rank)")
      ->check(CLI::PositiveNumber);
  t->add_option("--epochs", tr.epochs, "epochs");
  t->add_option("--batch-size", tr.batch_size, "mini-batch size");
  t->add_option("--lr", tr.lr, "learning rate");
  t->add_option("--beta", tr.beta, "KL weight");
  t->add_option("--val-fraction", tr.val_fraction, "validation fraction");
  t->add_option("--recon", tr.recon, "mse | bce")->check(CLI::IsMember({"mse", "bce"}));
  t->add_option("--optimizer", tr.optimizer, "adam | sgd")->check(CLI::IsMember({"adam", "sgd"}));
  t->add_flag("--standardize,!--no-standardize", tr.standardize, "fixed input standardization");
  t->add_option("--seed", tr.seed, "initialization and shuffling seed");
  t->add_option("--out-dir", tr.out_dir, "output directory");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Metric block for one saved model");
  e->add_option("--model", ev.model, "model JSON")->required();
  e->add_option("--data", ev.data, "test dataset CSV")->required();
  e->add_option("--nsr", ev.nsr, "noise-to-signal ratios");
  e->add_option("--out-dir", ev.out_dir, "output directory");

  CompareArgs cmp;
  auto* m = app.add_subcommand("compare", "Full two-model pipeline and comparison report");
  m->add_option("--config", cmp.config, "experiment config JSON");
  m->add_option("--out-dir", cmp.out_dir, "output directory");
  m->add_option("--seed", cmp.seed, "split and model seed");
  m->add_option("--epochs", cmp.epochs, "epochs");
  m->add_option("--batch-size", cmp.batch_size, "mini-batch size");
  m->add_option("--lr", cmp.lr, "learning rate");
  m->add_option("--beta", cmp.beta, "KL weight");
  m->add_option("--data", cmp.data, "dataset CSV instead of the synthetic set");
  m->add_option("--normalize", cmp.normalize, "none | minmax01 | zscore")
      ->check(CLI::IsMember({"none", "minmax01", "zscore"}));
  m->add_flag("--mdl-preprocess,!--no-mdl-preprocess", cmp.mdl_preprocess, "feed MDL codes to the VAE");
  m->add_flag("--latent-from-mdl,!--no-latent-from-mdl", cmp.latent_from_mdl, "latent size from the MDL rank");

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Plain-text summary of a comparison.json");
  r->add_option("--comparison", rep.comparison, "comparison.json or the directory holding it")->required();
  r->add_option("--out-dir", rep.out_dir, "also write report.txt here (never the comparison's directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    if (code == 0) return 0;
    if (app.get_subcommands().empty()) std::fputs(app.help().c_str(), stderr);
    return 2;
  }

  try {
    if (*g) return run_generate(gen);
    if (*c) {
      if (comp.data.empty() && comp.embeddings.empty()) {
        std::fprintf(stderr, "compress: one of --data or --embeddings is required\n");
        return 2;
      }
      return run_compress(comp);
    }
    if (*t) return run_train(tr);
    if (*e) return run_evaluate(ev);
    if (*m) return run_compare(cmp);
    if (*r) return run_report(rep);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 2;
}
