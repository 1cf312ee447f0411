#ifndef MDLVAE_H
#define MDLVAE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MDLVAE_BUILDING)
#    define MDLVAE_API __declspec(dllexport)
#  else
#    define MDLVAE_API __declspec(dllimport)
#  endif
#else
#  define MDLVAE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mdlvae_status {
  MDLVAE_OK = 0,
  MDLVAE_ERR_INVALID_ARGUMENT = 1,
  MDLVAE_ERR_SHAPE = 2,
  MDLVAE_ERR_DOMAIN = 3,
  MDLVAE_ERR_CONVERGENCE = 4,
  MDLVAE_ERR_NUMERIC = 5,
  MDLVAE_ERR_LOOKUP = 6,
  MDLVAE_ERR_PARSE = 7,
  MDLVAE_ERR_CONTRACT = 8,
  MDLVAE_ERR_TRAINING = 9,
  MDLVAE_ERR_DEGENERATE = 10,
  MDLVAE_ERR_IO = 11,
  MDLVAE_ERR_INTERNAL = 12
} mdlvae_status;

typedef struct mdlvae_dataset mdlvae_dataset;
typedef struct mdlvae_compression mdlvae_compression;
typedef struct mdlvae_model mdlvae_model;
typedef struct mdlvae_history mdlvae_history;
typedef struct mdlvae_embeddings mdlvae_embeddings;

/* Message for the last failure on the calling thread; "" after a success. */
MDLVAE_API const char* mdlvae_last_error(void);
MDLVAE_API const char* mdlvae_status_name(mdlvae_status status);
MDLVAE_API const char* mdlvae_version(void);
/* Releases strings returned through char** out-parameters. */
MDLVAE_API void mdlvae_string_free(char* s);

/* Datasets. config_json may be NULL for the default synthetic set; keys
   follow the "synthetic" block of an experiment config. */
MDLVAE_API mdlvae_status mdlvae_dataset_generate(const char* config_json, mdlvae_dataset** out);
MDLVAE_API mdlvae_status mdlvae_dataset_from_array(const double* values, size_t rows, size_t cols,
                                                   mdlvae_dataset** out);
/* sidecar_path NULL derives <stem>.meta.json next to the CSV. */
MDLVAE_API mdlvae_status mdlvae_dataset_load(const char* csv_path, const char* sidecar_path, mdlvae_dataset** out);
MDLVAE_API mdlvae_status mdlvae_dataset_save(const mdlvae_dataset* ds, const char* csv_path,
                                             const char* sidecar_path);
/* kind: "none" | "minmax01" | "zscore". */
MDLVAE_API mdlvae_status mdlvae_dataset_normalize(const mdlvae_dataset* ds, const char* kind, mdlvae_dataset** out);
MDLVAE_API mdlvae_status mdlvae_dataset_shape(const mdlvae_dataset* ds, size_t* rows, size_t* cols);
/* Copies rows * cols values, row-major, into buffer of length len. */
MDLVAE_API mdlvae_status mdlvae_dataset_copy(const mdlvae_dataset* ds, double* buffer, size_t len);
MDLVAE_API void mdlvae_dataset_free(mdlvae_dataset* ds);

/* Embedding tables, JSON or CSV by file extension. */
MDLVAE_API mdlvae_status mdlvae_embeddings_load(const char* path, mdlvae_embeddings** out);
MDLVAE_API mdlvae_status mdlvae_embeddings_as_dataset(const mdlvae_embeddings* table, mdlvae_dataset** out);
MDLVAE_API void mdlvae_embeddings_free(mdlvae_embeddings* table);

/* MDL compression. */
MDLVAE_API mdlvae_status mdlvae_select_rank(const mdlvae_dataset* ds, size_t* rank);
/* CSV k,model_bits,data_bits,total_bits for every k. */
MDLVAE_API mdlvae_status mdlvae_dl_scan_csv(const mdlvae_dataset* ds, char** out_csv);
MDLVAE_API mdlvae_status mdlvae_compress(const mdlvae_dataset* ds, size_t rank, mdlvae_compression** out);
MDLVAE_API mdlvae_status mdlvae_compression_load(const char* path, mdlvae_compression** out);
MDLVAE_API mdlvae_status mdlvae_compression_rank(const mdlvae_compression* c, size_t* rank);
MDLVAE_API mdlvae_status mdlvae_compression_total_bits(const mdlvae_compression* c, double* bits);
MDLVAE_API mdlvae_status mdlvae_compression_save(const mdlvae_compression* c, const char* path);
MDLVAE_API mdlvae_status mdlvae_compression_save_codes(const mdlvae_compression* c, const char* csv_path);
MDLVAE_API void mdlvae_compression_free(mdlvae_compression* c);

/* Models. spec_json uses the keys of a model block in an experiment config
   (NULL for defaults). With a compression the network consumes its codes.
   Standardization is fitted on train here, so an untrained model is fully
   determined by its arguments. */
MDLVAE_API mdlvae_status mdlvae_model_create(const char* spec_json, const char* label, const mdlvae_dataset* train,
                                             const mdlvae_compression* compression, size_t latent_k, double beta,
                                             uint64_t seed, mdlvae_model** out);
/* train_json uses the keys of the "train" block; the model is updated in place. */
MDLVAE_API mdlvae_status mdlvae_model_train(mdlvae_model* model, const mdlvae_dataset* train, const char* train_json,
                                            uint64_t seed, mdlvae_history** out);
MDLVAE_API mdlvae_status mdlvae_model_save(const mdlvae_model* model, const char* path);
MDLVAE_API mdlvae_status mdlvae_model_load(const char* path, mdlvae_model** out);
MDLVAE_API mdlvae_status mdlvae_model_reconstruct(const mdlvae_model* model, const mdlvae_dataset* ds,
                                                  mdlvae_dataset** out);
/* Single-model metric block as JSON. nsr_json is an array or NULL. */
MDLVAE_API mdlvae_status mdlvae_model_evaluate(const mdlvae_model* model, const mdlvae_dataset* test,
                                               const char* nsr_json, char** out_json);
MDLVAE_API void mdlvae_model_free(mdlvae_model* model);

MDLVAE_API mdlvae_status mdlvae_history_csv(const mdlvae_history* h, char** out_csv);
MDLVAE_API mdlvae_status mdlvae_history_epochs(const mdlvae_history* h, size_t* epochs);
MDLVAE_API mdlvae_status mdlvae_history_train_loss(const mdlvae_history* h, size_t epoch, double* loss);
MDLVAE_API void mdlvae_history_free(mdlvae_history* h);

/* Full two-model run. output_dir overrides the config when non-NULL. The
   manifest comes back as JSON. */
MDLVAE_API mdlvae_status mdlvae_experiment_run(const char* config_json, const char* output_dir,
                                               char** out_manifest_json);
MDLVAE_API mdlvae_status mdlvae_config_hash(const char* config_json, char** out_hash);
/* Resolved config with every default filled in. */
MDLVAE_API mdlvae_status mdlvae_config_resolve(const char* config_json, char** out_json);
/* UTC ISO 8601 timestamp. */
MDLVAE_API mdlvae_status mdlvae_timestamp(char** out);
/* Writes <output_dir>/manifest.json. The config hash covers params_json in
   canonical form; manifest.json is appended to the artifact list. */
MDLVAE_API mdlvae_status mdlvae_manifest_write(const char* output_dir, const char* params_json, uint64_t seed,
                                               const char* const* artifacts, size_t n_artifacts,
                                               const char* started_at);
MDLVAE_API mdlvae_status mdlvae_report_render(const char* comparison_json, char** out_text);

#ifdef __cplusplus
}
#endif

#endif
