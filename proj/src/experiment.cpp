#include "mdlvae/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <json.hpp>
#include <set>

#include "mdlvae/error.hpp"
#include "mdlvae/mdl_compress.hpp"
#include "mdlvae/serialize.hpp"
#include "text_io.hpp"

namespace mdlvae {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::parse, "config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(ErrorKind::parse, "config: unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json synthetic_json(const SyntheticConfig& s) {
  return {{"n_samples", s.n_samples},   {"n_features", s.n_features},       {"true_rank", s.true_rank},
          {"noise_sigma", s.noise_sigma}, {"n_classes", s.n_classes}, {"class_separation", s.class_separation},
          {"seed", s.seed}};
}

json model_spec_json(const ModelSpec& m) {
  return {{"kind", m.kind},
          {"hidden", m.architecture.hidden},
          {"hidden_activation", to_string(m.architecture.hidden_activation)},
          {"output_activation", m.output_activation},
          {"init_scale", m.architecture.init_scale},
          {"standardize", m.standardize},
          {"latent_k", m.latent_k}};
}

ModelSpec model_spec_from(const json& j, ModelSpec m, const std::string& where) {
  reject_unknown(j, {"kind", "hidden", "hidden_activation", "output_activation", "init_scale", "standardize", "latent_k"},
                 where);
  read(j, "kind", m.kind);
  read(j, "hidden", m.architecture.hidden);
  if (j.contains("hidden_activation"))
    m.architecture.hidden_activation = parse_activation(j.at("hidden_activation").get<std::string>());
  read(j, "output_activation", m.output_activation);
  read(j, "init_scale", m.architecture.init_scale);
  read(j, "standardize", m.standardize);
  read(j, "latent_k", m.latent_k);
  return m;
}

SyntheticConfig synthetic_from(const json& s, SyntheticConfig sc) {
  reject_unknown(s, {"n_samples", "n_features", "true_rank", "noise_sigma", "n_classes", "class_separation", "seed"},
                 "synthetic");
  read(s, "n_samples", sc.n_samples);
  read(s, "n_features", sc.n_features);
  read(s, "true_rank", sc.true_rank);
  read(s, "noise_sigma", sc.noise_sigma);
  read(s, "n_classes", sc.n_classes);
  read(s, "class_separation", sc.class_separation);
  read(s, "seed", sc.seed);
  return sc;
}

TrainConfig train_from(const json& t, TrainConfig c) {
  reject_unknown(t, {"epochs", "batch_size", "learning_rate", "beta", "recon_kind", "val_fraction", "optimizer",
                     "adam_beta1", "adam_beta2", "adam_epsilon"},
                 "train");
  read(t, "epochs", c.epochs);
  read(t, "batch_size", c.batch_size);
  read(t, "learning_rate", c.learning_rate);
  read(t, "beta", c.beta);
  if (t.contains("recon_kind")) c.recon_kind = parse_recon_kind(t.at("recon_kind").get<std::string>());
  read(t, "val_fraction", c.val_fraction);
  if (t.contains("optimizer")) c.optimizer = parse_optimizer(t.at("optimizer").get<std::string>());
  read(t, "adam_beta1", c.adam_beta1);
  read(t, "adam_beta2", c.adam_beta2);
  read(t, "adam_epsilon", c.adam_epsilon);
  return c;
}

template <class Fn>
auto parse_section(const std::string& text, Fn&& fn) {
  try {
    return fn(text.empty() ? json::object() : json::parse(text));
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("config: ") + e.what());
  }
}

json train_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"beta", t.beta},
          {"recon_kind", to_string(t.recon_kind)},
          {"val_fraction", t.val_fraction},
          {"optimizer", to_string(t.optimizer)},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"adam_epsilon", t.adam_epsilon}};
}

json canonical(const ExperimentConfig& c) {
  json dataset = {{"synthetic", synthetic_json(c.dataset.synthetic)},
                  {"csv_path", c.dataset.csv_path},
                  {"normalization", to_string(c.dataset.normalization)}};
  return {{"dataset", std::move(dataset)},
          {"pipeline",
           {{"use_mdl_preprocess", c.pipeline.use_mdl_preprocess}, {"latent_from_mdl", c.pipeline.latent_from_mdl}}},
          {"models", {{"vae_mdl", model_spec_json(c.vae_mdl)}, {"standard_ae", model_spec_json(c.standard_ae)}}},
          {"train", train_json(c.train)},
          {"evaluation",
           {{"nsr", c.evaluation.nsr},
            {"t_test_metrics", c.evaluation.t_test_metrics},
            {"test_fraction", c.evaluation.test_fraction},
            {"noise_seed", c.evaluation.noise_seed},
            {"inference_repeats", c.evaluation.inference_repeats}}},
          {"seed", c.seed}};
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Activation resolve_output(const ModelSpec& spec, const Matrix& inputs) {
  if (spec.output_activation != "auto") return parse_activation(spec.output_activation);
  if (spec.standardize) return Activation::linear;
  for (double v : inputs.data())
    if (v < 0.0 || v > 1.0) return Activation::linear;
  return Activation::sigmoid;
}

void write_artifact(const std::filesystem::path& dir, const std::string& name, const std::string& content,
                    std::vector<std::string>& artifacts) {
  detail::write_file((dir / name).string(), content);
  artifacts.push_back(name);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset.csv_path.empty()) {
    dataset.synthetic.validate();
  } else if (!std::filesystem::exists(dataset.csv_path)) {
    fail(ErrorKind::io, "config: dataset file '" + dataset.csv_path + "' does not exist");
  }
  for (const ModelSpec* m : {&vae_mdl, &standard_ae}) {
    if (m->kind != "vae" && m->kind != "ae") fail(ErrorKind::domain, "config: model kind must be 'vae' or 'ae'");
    if (m->output_activation != "auto") parse_activation(m->output_activation);
    if (m->latent_k < 1) fail(ErrorKind::domain, "config: latent_k must be positive");
    if (!(m->architecture.init_scale > 0.0)) fail(ErrorKind::domain, "config: init_scale must be positive");
    for (std::size_t h : m->architecture.hidden)
      if (h < 1) fail(ErrorKind::domain, "config: hidden widths must be positive");
  }
  train.validate();
  if (!(evaluation.test_fraction > 0.0 && evaluation.test_fraction < 1.0))
    fail(ErrorKind::domain, "config: test_fraction must lie in (0, 1)");
  if (evaluation.inference_repeats < 1) fail(ErrorKind::domain, "config: inference_repeats must be >= 1");
  for (double v : evaluation.nsr)
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::domain, "config: nsr values must be >= 0");
  for (const auto& m : evaluation.t_test_metrics)
    if (m != "mse" && m != "mae" && m != "rmse") fail(ErrorKind::domain, "config: unknown t-test metric '" + m + "'");
}

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    reject_unknown(j, {"dataset", "pipeline", "models", "train", "evaluation", "output_dir", "seed"}, "config");
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      reject_unknown(d, {"synthetic", "csv_path", "normalization"}, "dataset");
      if (d.contains("synthetic")) {
        c.dataset.synthetic = synthetic_from(d.at("synthetic"), c.dataset.synthetic);
      }
      read(d, "csv_path", c.dataset.csv_path);
      if (d.contains("normalization"))
        c.dataset.normalization = parse_normalization(d.at("normalization").get<std::string>());
    }
    if (j.contains("pipeline")) {
      const json& p = j.at("pipeline");
      reject_unknown(p, {"use_mdl_preprocess", "latent_from_mdl"}, "pipeline");
      read(p, "use_mdl_preprocess", c.pipeline.use_mdl_preprocess);
      read(p, "latent_from_mdl", c.pipeline.latent_from_mdl);
    }
    if (j.contains("models")) {
      const json& m = j.at("models");
      reject_unknown(m, {"vae_mdl", "standard_ae"}, "models");
      if (m.contains("vae_mdl")) c.vae_mdl = model_spec_from(m.at("vae_mdl"), c.vae_mdl, "models.vae_mdl");
      if (m.contains("standard_ae"))
        c.standard_ae = model_spec_from(m.at("standard_ae"), c.standard_ae, "models.standard_ae");
    }
    if (j.contains("train")) {
      c.train = train_from(j.at("train"), c.train);
    }
    if (j.contains("evaluation")) {
      const json& e = j.at("evaluation");
      reject_unknown(e, {"nsr", "t_test_metrics", "test_fraction", "noise_seed", "inference_repeats"}, "evaluation");
      read(e, "nsr", c.evaluation.nsr);
      read(e, "t_test_metrics", c.evaluation.t_test_metrics);
      read(e, "test_fraction", c.evaluation.test_fraction);
      read(e, "noise_seed", c.evaluation.noise_seed);
      read(e, "inference_repeats", c.evaluation.inference_repeats);
    }
    read(j, "output_dir", c.output_dir);
    read(j, "seed", c.seed);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("config: ") + e.what());
  }
  return c;
}

ModelSpec model_spec_from_json(const std::string& text, const ModelSpec& defaults) {
  return parse_section(text, [&](const json& j) { return model_spec_from(j, defaults, "model"); });
}

TrainConfig train_config_from_json(const std::string& text, const TrainConfig& defaults) {
  return parse_section(text, [&](const json& j) { return train_from(j, defaults); });
}

SyntheticConfig synthetic_from_json(const std::string& text) {
  return parse_section(text, [&](const json& j) { return synthetic_from(j, SyntheticConfig{}); });
}

std::string config_to_json(const ExperimentConfig& config) {
  json j = canonical(config);
  j["output_dir"] = config.output_dir;
  return j.dump(2) + "\n";
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string config_hash(const ExperimentConfig& config) { return hex64(fnv1a(canonical(config).dump())); }

std::string json_hash(const std::string& json_text) {
  try {
    return hex64(fnv1a(json::parse(json_text).dump()));
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("json_hash: ") + e.what());
  }
}

Dataset load_experiment_dataset(const DatasetSpec& spec) {
  Dataset ds = spec.csv_path.empty() ? generate_synthetic(spec.synthetic)
                                     : load_dataset(spec.csv_path, sidecar_path_for(spec.csv_path));
  if (spec.normalization != NormalizationKind::none) {
    if (ds.normalization.kind != NormalizationKind::none) ds = denormalize(ds);
    ds = normalize(ds, spec.normalization);
  }
  return ds;
}

ReconstructionModel build_model(const ModelSpec& spec, const std::string& label, const Matrix& raw_train,
                                std::size_t latent_k, double beta, std::uint64_t seed,
                                std::optional<CompressionResult> preprocess, ReconKind recon_kind) {
  const Matrix inputs = preprocess ? project(*preprocess, raw_train) : raw_train;
  ArchitectureSpec arch = spec.architecture;
  arch.output_activation = resolve_output(spec, inputs);
  Rng rng(seed);
  ReconstructionModel model{label, AeModel{}, std::move(preprocess), recon_kind};
  if (spec.kind == "vae") {
    VaeModel vae = make_vae(inputs.cols(), latent_k, arch, beta, rng);
    if (spec.standardize) vae.scaling = FeatureScaling::fit(inputs);
    model.network = std::move(vae);
  } else if (spec.kind == "ae") {
    AeModel ae = make_ae(inputs.cols(), latent_k, arch, rng);
    if (spec.standardize) ae.scaling = FeatureScaling::fit(inputs);
    model.network = std::move(ae);
  } else {
    fail(ErrorKind::domain, "unknown model kind '" + spec.kind + "'");
  }
  return model;
}

TrainingHistory train_model(ReconstructionModel& model, const Matrix& raw_train, const TrainConfig& config,
                            const BatchObserver& observer) {
  const Matrix inputs = model.network_input(raw_train);
  TrainConfig cfg = config;
  cfg.recon_kind = model.recon_kind;
  return std::visit(
      [&](auto& net) {
        auto result = train(net, inputs, cfg, observer);
        net = std::move(result.model);
        return std::move(result.history);
      },
      model.network);
}

std::uint64_t model_seed(std::uint64_t seed, const std::string& label) {
  // SplitMix64 finalizer over the mixed inputs.
  std::uint64_t z = seed ^ fnv1a(label);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string manifest_to_json(const RunManifest& m) {
  return json{{"config_hash", m.config_hash},
              {"seed", m.seed},
              {"artifacts", m.artifacts},
              {"version", m.version},
              {"started_at", m.started_at},
              {"finished_at", m.finished_at}}
             .dump(2) +
         "\n";
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult out;
  out.manifest.started_at = utc_timestamp();
  out.manifest.config_hash = config_hash(config);
  out.manifest.seed = config.seed;

  const Dataset ds = load_experiment_dataset(config.dataset);
  const DatasetSplit split = split_dataset(ds.x, config.evaluation.test_fraction, config.seed);
  std::optional<std::vector<int>> test_labels;
  if (ds.labels) {
    test_labels.emplace();
    for (std::size_t r : split.val_rows) test_labels->push_back((*ds.labels)[r]);
  }

  const std::size_t mdl_rank = config.pipeline.latent_from_mdl ? select_rank(split.train) : 0;
  const std::size_t k_vae = mdl_rank ? mdl_rank : config.vae_mdl.latent_k;
  const std::size_t k_ae = mdl_rank ? mdl_rank : config.standard_ae.latent_k;
  out.rank = k_vae;
  std::optional<CompressionResult> compression;
  if (config.pipeline.use_mdl_preprocess) compression = compress(split.train, k_vae);

  const std::string labels[2] = {"vae_mdl", "standard_ae"};
  ReconstructionModel models[2] = {
      build_model(config.vae_mdl, labels[0], split.train, k_vae, config.train.beta, model_seed(config.seed, labels[0]),
                  compression, config.train.recon_kind),
      build_model(config.standard_ae, labels[1], split.train, k_ae, config.train.beta,
                  model_seed(config.seed, labels[1]), std::nullopt, config.train.recon_kind)};
  TrainingHistory* histories[2] = {&out.vae_history, &out.ae_history};
  for (int i = 0; i < 2; ++i) {
    TrainConfig tc = config.train;
    tc.seed = model_seed(config.seed, labels[i]);
    *histories[i] = train_model(models[i], split.train, tc);
  }

  CompareOptions opts;
  opts.nsr = config.evaluation.nsr;
  opts.noise_seed = config.evaluation.noise_seed;
  opts.inference_repeats = config.evaluation.inference_repeats;
  out.report = compare_models(models[0], models[1], split.val, test_labels, opts);
  for (int i = 0; i < 2; ++i) {
    if (!histories[i]->epochs.empty()) out.report.models[i].train_loss = histories[i]->epochs.back().train_loss;
  }
  std::erase_if(out.report.tests, [&](const MetricTest& t) {
    const auto& wanted = config.evaluation.t_test_metrics;
    return std::find(wanted.begin(), wanted.end(), t.metric) == wanted.end();
  });

  if (!config.output_dir.empty()) {
    const std::filesystem::path dir(config.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create output directory '" + config.output_dir + "': " + ec.message());
    auto& files = out.manifest.artifacts;
    write_artifact(dir, "config.json", config_to_json(config), files);
    if (compression) write_artifact(dir, "compression.json", compression_to_json(*compression), files);
    for (int i = 0; i < 2; ++i) {
      write_artifact(dir, "model_" + labels[i] + ".json", model_to_json(models[i]), files);
      write_artifact(dir, "history_" + labels[i] + ".csv", history_to_csv(*histories[i]), files);
    }
    write_artifact(dir, "comparison.json", report_to_json(out.report), files);
    write_artifact(dir, "comparison.csv", report_to_csv(out.report), files);
    json timing = {{"training_seconds",
                    {{labels[0], out.vae_history.training_seconds}, {labels[1], out.ae_history.training_seconds}}},
                   {"inference_seconds",
                    {{labels[0], out.report.models[0].inference_seconds},
                     {labels[1], out.report.models[1].inference_seconds}}}};
    write_artifact(dir, "timing.json", timing.dump(2) + "\n", files);
    files.push_back("manifest.json");
    out.manifest.finished_at = utc_timestamp();
    detail::write_file((dir / "manifest.json").string(), manifest_to_json(out.manifest));
  } else {
    out.manifest.finished_at = utc_timestamp();
  }
  return out;
}

}  // namespace mdlvae
