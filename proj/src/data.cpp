#include "mdlvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "mdlvae/error.hpp"
#include "text_io.hpp"

namespace mdlvae {

void SyntheticConfig::validate() const {
  if (n_samples < 2) fail(ErrorKind::domain, "synthetic: n_samples must be at least 2");
  if (n_features < 1) fail(ErrorKind::domain, "synthetic: n_features must be positive");
  if (true_rank < 1 || true_rank > n_features) fail(ErrorKind::domain, "synthetic: need 1 <= true_rank <= n_features");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail(ErrorKind::domain, "synthetic: noise_sigma must be >= 0");
  if (n_classes < 1) fail(ErrorKind::domain, "synthetic: n_classes must be positive");
  if (!std::isfinite(class_separation)) fail(ErrorKind::domain, "synthetic: class_separation must be finite");
  if (mixing && (mixing->rows() != true_rank || mixing->cols() != n_features)) {
    fail(ErrorKind::shape, "synthetic: mixing matrix must be true_rank x n_features");
  }
}

const char* to_string(NormalizationKind k) noexcept {
  switch (k) {
    case NormalizationKind::none: return "none";
    case NormalizationKind::minmax01: return "minmax01";
    case NormalizationKind::zscore: return "zscore";
  }
  return "none";
}

NormalizationKind parse_normalization(const std::string& name) {
  if (name == "none") return NormalizationKind::none;
  if (name == "minmax01") return NormalizationKind::minmax01;
  if (name == "zscore") return NormalizationKind::zscore;
  fail(ErrorKind::parse, "unknown normalization '" + name + "'");
}

void Dataset::validate() const {
  if (labels && labels->size() != x.rows()) fail(ErrorKind::shape, "dataset: label count does not match rows");
  if (!feature_names.empty() && feature_names.size() != x.cols())
    fail(ErrorKind::shape, "dataset: feature name count does not match columns");
  if (normalization.kind != NormalizationKind::none &&
      (normalization.offset.size() != x.cols() || normalization.scale.size() != x.cols())) {
    fail(ErrorKind::shape, "dataset: normalization record does not match columns");
  }
}

namespace {

std::vector<std::string> default_feature_names(std::size_t d) {
  std::vector<std::string> names;
  names.reserve(d);
  for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
  return names;
}

}  // namespace

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t r = cfg.true_rank;
  const Matrix mixing = cfg.mixing ? *cfg.mixing : rng_normal_matrix(rng, r, cfg.n_features);

  Dataset ds;
  ds.labels.emplace(cfg.n_samples);
  Matrix factors(cfg.n_samples, r);
  const double mid = 0.5 * static_cast<double>(cfg.n_classes - 1);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    const std::size_t c = i % cfg.n_classes;
    (*ds.labels)[i] = static_cast<int>(c);
    auto row = factors.row(i);
    for (std::size_t j = 0; j < r; ++j) row[j] = rng.normal();
    row[0] += (static_cast<double>(c) - mid) * cfg.class_separation;
  }
  ds.x = mat_mul(factors, mixing);
  if (cfg.noise_sigma > 0.0) {
    for (double& v : ds.x.data()) v += cfg.noise_sigma * rng.normal();
  }
  ds.feature_names = default_feature_names(cfg.n_features);
  ds.seed = cfg.seed;
  std::ostringstream prov;
  prov << "synthetic(n=" << cfg.n_samples << ",d=" << cfg.n_features << ",r=" << r
       << ",sigma=" << detail::format_double(cfg.noise_sigma) << ",classes=" << cfg.n_classes
       << ",separation=" << detail::format_double(cfg.class_separation) << ",seed=" << cfg.seed << ")";
  ds.provenance = prov.str();
  return ds;
}

Dataset load_csv(const std::string& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty() || lines.front().empty()) fail(ErrorKind::parse, path + ": missing header row");
  auto header = detail::split_csv_line(lines.front());
  const bool has_label = header.back() == "label";
  const std::size_t d = header.size() - (has_label ? 1 : 0);
  if (d == 0) fail(ErrorKind::parse, path + ": no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t rows = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    ++rows;
    const auto cells = detail::split_csv_line(lines[li]);
    if (cells.size() != header.size()) {
      fail(ErrorKind::parse, path + ": row " + std::to_string(rows) + " has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < d; ++c) {
      const auto v = detail::parse_double(cells[c]);
      if (!v) {
        fail(ErrorKind::parse, path + ": invalid numeric cell '" + cells[c] + "' at (" + std::to_string(rows) + "," +
                                   std::to_string(c + 1) + ")");
      }
      values.push_back(*v);
    }
    if (has_label) {
      const auto v = detail::parse_double(cells[d]);
      if (!v || *v != std::floor(*v)) {
        fail(ErrorKind::parse, path + ": invalid label '" + cells[d] + "' at (" + std::to_string(rows) + "," +
                                   std::to_string(d + 1) + ")");
      }
      labels.push_back(static_cast<int>(*v));
    }
  }
  if (rows == 0) fail(ErrorKind::parse, path + ": no data rows");

  Dataset ds;
  ds.x = Matrix(rows, d, std::move(values));
  if (has_label) ds.labels = std::move(labels);
  header.resize(d);
  ds.feature_names = std::move(header);
  ds.provenance = "csv:" + std::filesystem::path(path).filename().string();
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  ds.validate();
  const auto names = ds.feature_names.empty() ? default_feature_names(ds.x.cols()) : ds.feature_names;
  std::string out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) out += ',';
    out += names[j];
  }
  if (ds.labels) out += ",label";
  out += '\n';
  for (std::size_t r = 0; r < ds.x.rows(); ++r) {
    const auto row = ds.x.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += detail::format_double(row[j], 9);
    }
    if (ds.labels) out += "," + std::to_string((*ds.labels)[r]);
    out += '\n';
  }
  detail::write_file(path, out);
}

std::string sidecar_path_for(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".meta.json");
  return p.string();
}

void save_dataset(const Dataset& ds, const std::string& csv_path, const std::string& sidecar_path) {
  save_csv(ds, csv_path);
  nlohmann::json meta;
  meta["normalization"] = {{"kind", to_string(ds.normalization.kind)},
                           {"offset", ds.normalization.offset},
                           {"scale", ds.normalization.scale}};
  meta["seed"] = ds.seed ? nlohmann::json(*ds.seed) : nlohmann::json(nullptr);
  meta["provenance"] = ds.provenance;
  meta["rows"] = ds.x.rows();
  meta["cols"] = ds.x.cols();
  detail::write_file(sidecar_path, meta.dump(2) + "\n");
}

Dataset load_dataset(const std::string& csv_path, const std::string& sidecar_path) {
  Dataset ds = load_csv(csv_path);
  if (sidecar_path.empty() || !std::filesystem::exists(sidecar_path)) return ds;
  try {
    const auto meta = nlohmann::json::parse(detail::read_file(sidecar_path));
    const auto& norm = meta.at("normalization");
    ds.normalization.kind = parse_normalization(norm.at("kind").get<std::string>());
    ds.normalization.offset = norm.at("offset").get<Vector>();
    ds.normalization.scale = norm.at("scale").get<Vector>();
    if (meta.contains("seed") && !meta["seed"].is_null()) ds.seed = meta["seed"].get<std::uint64_t>();
    ds.provenance = meta.value("provenance", ds.provenance);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, "dataset sidecar '" + sidecar_path + "': " + e.what());
  }
  ds.validate();
  return ds;
}

Matrix apply_normalization(const Normalization& norm, const Matrix& raw) {
  if (norm.kind == NormalizationKind::none) return raw;
  if (norm.offset.size() != raw.cols()) fail(ErrorKind::shape, "normalization width does not match data");
  Matrix out = raw;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - norm.offset[j]) / norm.scale[j];
  }
  return out;
}

Dataset normalize(const Dataset& ds, NormalizationKind kind) {
  ds.validate();
  if (ds.normalization.kind != NormalizationKind::none) {
    fail(ErrorKind::domain, "dataset is already normalized; denormalize first");
  }
  Dataset out = ds;
  out.normalization.kind = kind;
  const std::size_t d = ds.x.cols();
  if (kind == NormalizationKind::none) {
    out.normalization.offset.clear();
    out.normalization.scale.clear();
    return out;
  }
  out.normalization.offset.assign(d, 0.0);
  out.normalization.scale.assign(d, 1.0);
  const double n = static_cast<double>(ds.x.rows());
  for (std::size_t j = 0; j < d; ++j) {
    const Vector col = ds.x.column(j);
    if (kind == NormalizationKind::minmax01) {
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      if (*hi > *lo) {
        out.normalization.offset[j] = *lo;
        out.normalization.scale[j] = *hi - *lo;
      } else {
        out.normalization.offset[j] = *lo - 0.5;
      }
    } else {
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= n;
      double ss = 0.0;
      for (double v : col) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / n);
      out.normalization.offset[j] = mean;
      out.normalization.scale[j] = sd > 0.0 ? sd : 1.0;
    }
  }
  out.x = apply_normalization(out.normalization, ds.x);
  return out;
}

Dataset denormalize(const Dataset& ds) {
  ds.validate();
  Dataset out = ds;
  if (ds.normalization.kind != NormalizationKind::none) {
    for (std::size_t r = 0; r < out.x.rows(); ++r) {
      auto row = out.x.row(r);
      for (std::size_t j = 0; j < row.size(); ++j)
        row[j] = row[j] * ds.normalization.scale[j] + ds.normalization.offset[j];
    }
  }
  out.normalization = {};
  return out;
}

}  // namespace mdlvae
