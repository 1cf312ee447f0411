#include "mdlvae/mdlvae.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <json.hpp>
#include <new>
#include <string>

#include "mdlvae/data.hpp"
#include "mdlvae/embedding.hpp"
#include "mdlvae/error.hpp"
#include "mdlvae/evaluation.hpp"
#include "mdlvae/experiment.hpp"
#include "mdlvae/mdl_compress.hpp"
#include "mdlvae/serialize.hpp"
#include "text_io.hpp"

struct mdlvae_dataset {
  mdlvae::Dataset value;
};
struct mdlvae_compression {
  mdlvae::CompressionResult value;
};
struct mdlvae_model {
  mdlvae::ReconstructionModel value;
};
struct mdlvae_history {
  mdlvae::TrainingHistory value;
};
struct mdlvae_embeddings {
  mdlvae::EmbeddingTable value;
};

namespace {

thread_local std::string last_error;

mdlvae_status status_for(mdlvae::ErrorKind kind) {
  using mdlvae::ErrorKind;
  switch (kind) {
    case ErrorKind::shape: return MDLVAE_ERR_SHAPE;
    case ErrorKind::domain: return MDLVAE_ERR_DOMAIN;
    case ErrorKind::convergence: return MDLVAE_ERR_CONVERGENCE;
    case ErrorKind::numeric: return MDLVAE_ERR_NUMERIC;
    case ErrorKind::lookup: return MDLVAE_ERR_LOOKUP;
    case ErrorKind::parse: return MDLVAE_ERR_PARSE;
    case ErrorKind::contract: return MDLVAE_ERR_CONTRACT;
    case ErrorKind::training: return MDLVAE_ERR_TRAINING;
    case ErrorKind::degenerate: return MDLVAE_ERR_DEGENERATE;
    case ErrorKind::io: return MDLVAE_ERR_IO;
  }
  return MDLVAE_ERR_INTERNAL;
}

mdlvae_status fail_with(mdlvae_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <class Fn>
mdlvae_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return MDLVAE_OK;
  } catch (const mdlvae::Error& e) {
    return fail_with(status_for(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail_with(MDLVAE_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail_with(MDLVAE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail_with(MDLVAE_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail_with(MDLVAE_ERR_INTERNAL, "unknown failure");
  }
}

#define MDLVAE_REQUIRE(cond, what) \
  if (!(cond)) return fail_with(MDLVAE_ERR_INVALID_ARGUMENT, what)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string text_or_empty(const char* s) { return s ? std::string(s) : std::string(); }

}  // namespace

extern "C" {

const char* mdlvae_last_error(void) { return last_error.c_str(); }

const char* mdlvae_status_name(mdlvae_status status) {
  switch (status) {
    case MDLVAE_OK: return "ok";
    case MDLVAE_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case MDLVAE_ERR_SHAPE: return "shape";
    case MDLVAE_ERR_DOMAIN: return "domain";
    case MDLVAE_ERR_CONVERGENCE: return "convergence";
    case MDLVAE_ERR_NUMERIC: return "numeric";
    case MDLVAE_ERR_LOOKUP: return "lookup";
    case MDLVAE_ERR_PARSE: return "parse";
    case MDLVAE_ERR_CONTRACT: return "contract";
    case MDLVAE_ERR_TRAINING: return "training";
    case MDLVAE_ERR_DEGENERATE: return "degenerate";
    case MDLVAE_ERR_IO: return "io";
    case MDLVAE_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* mdlvae_version(void) { return mdlvae::kVersion; }

void mdlvae_string_free(char* s) { std::free(s); }

mdlvae_status mdlvae_dataset_generate(const char* config_json, mdlvae_dataset** out) {
  MDLVAE_REQUIRE(out, "out must not be NULL");
  return guarded([&] {
    const auto cfg = mdlvae::synthetic_from_json(text_or_empty(config_json));
    *out = new mdlvae_dataset{mdlvae::generate_synthetic(cfg)};
  });
}

mdlvae_status mdlvae_dataset_from_array(const double* values, size_t rows, size_t cols, mdlvae_dataset** out) {
  MDLVAE_REQUIRE(out && (values || rows * cols == 0), "values and out must not be NULL");
  return guarded([&] {
    mdlvae::Dataset ds;
    ds.x = mdlvae::Matrix(rows, cols, std::vector<double>(values, values + rows * cols));
    ds.provenance = "array";
    *out = new mdlvae_dataset{std::move(ds)};
  });
}

mdlvae_status mdlvae_dataset_load(const char* csv_path, const char* sidecar_path, mdlvae_dataset** out) {
  MDLVAE_REQUIRE(csv_path && out, "csv_path and out must not be NULL");
  return guarded([&] {
    const std::string sidecar = sidecar_path ? sidecar_path : mdlvae::sidecar_path_for(csv_path);
    *out = new mdlvae_dataset{mdlvae::load_dataset(csv_path, sidecar)};
  });
}

mdlvae_status mdlvae_dataset_save(const mdlvae_dataset* ds, const char* csv_path, const char* sidecar_path) {
  MDLVAE_REQUIRE(ds && csv_path, "dataset and csv_path must not be NULL");
  return guarded([&] {
    const std::string sidecar = sidecar_path ? sidecar_path : mdlvae::sidecar_path_for(csv_path);
    mdlvae::save_dataset(ds->value, csv_path, sidecar);
  });
}

mdlvae_status mdlvae_dataset_normalize(const mdlvae_dataset* ds, const char* kind, mdlvae_dataset** out) {
  MDLVAE_REQUIRE(ds && kind && out, "arguments must not be NULL");
  return guarded(
      [&] { *out = new mdlvae_dataset{mdlvae::normalize(ds->value, mdlvae::parse_normalization(kind))}; });
}

mdlvae_status mdlvae_dataset_shape(const mdlvae_dataset* ds, size_t* rows, size_t* cols) {
  MDLVAE_REQUIRE(ds && rows && cols, "arguments must not be NULL");
  *rows = ds->value.x.rows();
  *cols = ds->value.x.cols();
  last_error.clear();
  return MDLVAE_OK;
}

mdlvae_status mdlvae_dataset_copy(const mdlvae_dataset* ds, double* buffer, size_t len) {
  MDLVAE_REQUIRE(ds && buffer, "arguments must not be NULL");
  const auto data = ds->value.x.data();
  if (len < data.size()) return fail_with(MDLVAE_ERR_SHAPE, "buffer holds fewer than rows * cols values");
  std::copy(data.begin(), data.end(), buffer);
  last_error.clear();
  return MDLVAE_OK;
}

void mdlvae_dataset_free(mdlvae_dataset* ds) { delete ds; }

mdlvae_status mdlvae_embeddings_load(const char* path, mdlvae_embeddings** out) {
  MDLVAE_REQUIRE(path && out, "path and out must not be NULL");
  return guarded([&] {
    const bool csv = std::filesystem::path(path).extension() == ".csv";
    *out = new mdlvae_embeddings{csv ? mdlvae::load_embedding_csv(path) : mdlvae::load_embedding_json(path)};
  });
}

mdlvae_status mdlvae_embeddings_as_dataset(const mdlvae_embeddings* table, mdlvae_dataset** out) {
  MDLVAE_REQUIRE(table && out, "arguments must not be NULL");
  return guarded([&] {
    mdlvae::Dataset ds;
    ds.x = table->value.as_matrix();
    ds.provenance = "embeddings";
    *out = new mdlvae_dataset{std::move(ds)};
  });
}

void mdlvae_embeddings_free(mdlvae_embeddings* table) { delete table; }

mdlvae_status mdlvae_select_rank(const mdlvae_dataset* ds, size_t* rank) {
  MDLVAE_REQUIRE(ds && rank, "arguments must not be NULL");
  return guarded([&] { *rank = mdlvae::select_rank(ds->value.x); });
}

mdlvae_status mdlvae_dl_scan_csv(const mdlvae_dataset* ds, char** out_csv) {
  MDLVAE_REQUIRE(ds && out_csv, "arguments must not be NULL");
  return guarded([&] { *out_csv = dup_string(mdlvae::dl_scan_to_csv(mdlvae::description_length_scan(ds->value.x))); });
}

mdlvae_status mdlvae_compress(const mdlvae_dataset* ds, size_t rank, mdlvae_compression** out) {
  MDLVAE_REQUIRE(ds && out, "arguments must not be NULL");
  return guarded([&] { *out = new mdlvae_compression{mdlvae::compress(ds->value.x, rank)}; });
}

mdlvae_status mdlvae_compression_load(const char* path, mdlvae_compression** out) {
  MDLVAE_REQUIRE(path && out, "arguments must not be NULL");
  return guarded(
      [&] { *out = new mdlvae_compression{mdlvae::compression_from_json(mdlvae::detail::read_file(path))}; });
}

mdlvae_status mdlvae_compression_rank(const mdlvae_compression* c, size_t* rank) {
  MDLVAE_REQUIRE(c && rank, "arguments must not be NULL");
  *rank = c->value.rank;
  last_error.clear();
  return MDLVAE_OK;
}

mdlvae_status mdlvae_compression_total_bits(const mdlvae_compression* c, double* bits) {
  MDLVAE_REQUIRE(c && bits, "arguments must not be NULL");
  *bits = c->value.dl.total_bits;
  last_error.clear();
  return MDLVAE_OK;
}

mdlvae_status mdlvae_compression_save(const mdlvae_compression* c, const char* path) {
  MDLVAE_REQUIRE(c && path, "arguments must not be NULL");
  return guarded([&] { mdlvae::detail::write_file(path, mdlvae::compression_to_json(c->value)); });
}

mdlvae_status mdlvae_compression_save_codes(const mdlvae_compression* c, const char* csv_path) {
  MDLVAE_REQUIRE(c && csv_path, "arguments must not be NULL");
  return guarded([&] { mdlvae::detail::write_file(csv_path, mdlvae::matrix_to_csv(c->value.codes, "z")); });
}

void mdlvae_compression_free(mdlvae_compression* c) { delete c; }

mdlvae_status mdlvae_model_create(const char* spec_json, const char* label, const mdlvae_dataset* train,
                                  const mdlvae_compression* compression, size_t latent_k, double beta,
                                  uint64_t seed, mdlvae_model** out) {
  MDLVAE_REQUIRE(train && out, "train and out must not be NULL");
  return guarded([&] {
    const auto spec = mdlvae::model_spec_from_json(text_or_empty(spec_json));
    std::optional<mdlvae::CompressionResult> pre;
    if (compression) pre = compression->value;
    *out = new mdlvae_model{mdlvae::build_model(spec, label ? label : spec.kind, train->value.x, latent_k, beta, seed,
                                                std::move(pre))};
  });
}

mdlvae_status mdlvae_model_train(mdlvae_model* model, const mdlvae_dataset* train, const char* train_json,
                                 uint64_t seed, mdlvae_history** out) {
  MDLVAE_REQUIRE(model && train && out, "model, train and out must not be NULL");
  return guarded([&] {
    auto cfg = mdlvae::train_config_from_json(text_or_empty(train_json));
    cfg.seed = seed;
    model->value.recon_kind = cfg.recon_kind;
    auto history = mdlvae::train_model(model->value, train->value.x, cfg);
    *out = new mdlvae_history{std::move(history)};
  });
}

mdlvae_status mdlvae_model_save(const mdlvae_model* model, const char* path) {
  MDLVAE_REQUIRE(model && path, "arguments must not be NULL");
  return guarded([&] { mdlvae::detail::write_file(path, mdlvae::model_to_json(model->value)); });
}

mdlvae_status mdlvae_model_load(const char* path, mdlvae_model** out) {
  MDLVAE_REQUIRE(path && out, "arguments must not be NULL");
  return guarded([&] { *out = new mdlvae_model{mdlvae::model_from_json(mdlvae::detail::read_file(path))}; });
}

mdlvae_status mdlvae_model_reconstruct(const mdlvae_model* model, const mdlvae_dataset* ds, mdlvae_dataset** out) {
  MDLVAE_REQUIRE(model && ds && out, "arguments must not be NULL");
  return guarded([&] {
    mdlvae::Dataset rec;
    rec.x = model->value.reconstruct(ds->value.x);
    rec.feature_names = ds->value.feature_names;
    rec.provenance = "reconstruction:" + model->value.label;
    *out = new mdlvae_dataset{std::move(rec)};
  });
}

mdlvae_status mdlvae_model_evaluate(const mdlvae_model* model, const mdlvae_dataset* test, const char* nsr_json,
                                    char** out_json) {
  MDLVAE_REQUIRE(model && test && out_json, "arguments must not be NULL");
  return guarded([&] {
    mdlvae::CompareOptions opts;
    if (nsr_json) opts.nsr = nlohmann::json::parse(nsr_json).get<std::vector<double>>();
    const auto block = mdlvae::evaluate_model(model->value, test->value.x, test->value.labels, opts);
    *out_json = dup_string(mdlvae::block_to_json(block, true));
  });
}

void mdlvae_model_free(mdlvae_model* model) { delete model; }

mdlvae_status mdlvae_history_csv(const mdlvae_history* h, char** out_csv) {
  MDLVAE_REQUIRE(h && out_csv, "arguments must not be NULL");
  return guarded([&] { *out_csv = dup_string(mdlvae::history_to_csv(h->value)); });
}

mdlvae_status mdlvae_history_epochs(const mdlvae_history* h, size_t* epochs) {
  MDLVAE_REQUIRE(h && epochs, "arguments must not be NULL");
  *epochs = h->value.epochs.size();
  last_error.clear();
  return MDLVAE_OK;
}

mdlvae_status mdlvae_history_train_loss(const mdlvae_history* h, size_t epoch, double* loss) {
  MDLVAE_REQUIRE(h && loss, "arguments must not be NULL");
  if (epoch >= h->value.epochs.size()) return fail_with(MDLVAE_ERR_LOOKUP, "epoch index out of range");
  *loss = h->value.epochs[epoch].train_loss;
  last_error.clear();
  return MDLVAE_OK;
}

void mdlvae_history_free(mdlvae_history* h) { delete h; }

mdlvae_status mdlvae_experiment_run(const char* config_json, const char* output_dir, char** out_manifest_json) {
  MDLVAE_REQUIRE(out_manifest_json, "out must not be NULL");
  return guarded([&] {
    auto cfg = config_json ? mdlvae::config_from_json(config_json) : mdlvae::ExperimentConfig{};
    if (output_dir) cfg.output_dir = output_dir;
    const auto result = mdlvae::run_experiment(cfg);
    *out_manifest_json = dup_string(mdlvae::manifest_to_json(result.manifest));
  });
}

mdlvae_status mdlvae_config_hash(const char* config_json, char** out_hash) {
  MDLVAE_REQUIRE(out_hash, "out must not be NULL");
  return guarded([&] {
    const auto cfg = config_json ? mdlvae::config_from_json(config_json) : mdlvae::ExperimentConfig{};
    *out_hash = dup_string(mdlvae::config_hash(cfg));
  });
}

mdlvae_status mdlvae_config_resolve(const char* config_json, char** out_json) {
  MDLVAE_REQUIRE(out_json, "out must not be NULL");
  return guarded([&] {
    const auto cfg = config_json ? mdlvae::config_from_json(config_json) : mdlvae::ExperimentConfig{};
    *out_json = dup_string(mdlvae::config_to_json(cfg));
  });
}

mdlvae_status mdlvae_timestamp(char** out) {
  MDLVAE_REQUIRE(out, "out must not be NULL");
  return guarded([&] { *out = dup_string(mdlvae::utc_timestamp()); });
}

mdlvae_status mdlvae_manifest_write(const char* output_dir, const char* params_json, uint64_t seed,
                                    const char* const* artifacts, size_t n_artifacts, const char* started_at) {
  MDLVAE_REQUIRE(output_dir && params_json && (artifacts || n_artifacts == 0), "arguments must not be NULL");
  return guarded([&] {
    mdlvae::RunManifest m;
    m.config_hash = mdlvae::json_hash(params_json);
    m.seed = seed;
    const std::filesystem::path dir(output_dir);
    for (size_t i = 0; i < n_artifacts; ++i) {
      if (!std::filesystem::exists(dir / artifacts[i]))
        mdlvae::fail(mdlvae::ErrorKind::io, std::string("manifest lists missing artifact '") + artifacts[i] + "'");
      m.artifacts.emplace_back(artifacts[i]);
    }
    m.artifacts.emplace_back("manifest.json");
    m.started_at = started_at ? started_at : mdlvae::utc_timestamp();
    m.finished_at = mdlvae::utc_timestamp();
    mdlvae::detail::write_file((dir / "manifest.json").string(), mdlvae::manifest_to_json(m));
  });
}

mdlvae_status mdlvae_report_render(const char* comparison_json, char** out_text) {
  MDLVAE_REQUIRE(comparison_json && out_text, "arguments must not be NULL");
  return guarded([&] { *out_text = dup_string(mdlvae::render_report(mdlvae::report_from_json(comparison_json))); });
}

}  // extern "C"
