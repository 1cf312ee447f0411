#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdlvae/numerics.hpp"

namespace mdlvae {

struct SyntheticConfig {
  std::size_t n_samples = 2000;
  std::size_t n_features = 64;
  std::size_t true_rank = 8;
  double noise_sigma = 0.05;
  std::size_t n_classes = 2;
  double class_separation = 3.0;
  std::uint64_t seed = 42;
  // r x d mixing matrix; drawn i.i.d. standard normal from the seed when absent.
  std::optional<Matrix> mixing;

  void validate() const;
};

enum class NormalizationKind { none, minmax01, zscore };

const char* to_string(NormalizationKind k) noexcept;
NormalizationKind parse_normalization(const std::string& name);

// normalized = (raw - offset) / scale, per feature.
struct Normalization {
  NormalizationKind kind = NormalizationKind::none;
  Vector offset;
  Vector scale;
};

struct Dataset {
  Matrix x;
  std::optional<std::vector<int>> labels;
  std::vector<std::string> feature_names;
  Normalization normalization;
  std::optional<std::uint64_t> seed;
  std::string provenance;

  void validate() const;
};

// Class c draws latent factors from N(center_c, I_r) where consecutive class
// centers sit class_separation apart along the first latent axis. Rows cycle
// through the classes; x = factors * W + noise_sigma * N(0, 1).
Dataset generate_synthetic(const SyntheticConfig& cfg);

// Header row required; a final column named "label" holds integer classes.
// Parse errors cite the 1-based data row (header excluded) and column.
Dataset load_csv(const std::string& path);
// Floats use 9 significant digits.
void save_csv(const Dataset& ds, const std::string& path);

// CSV plus a JSON sidecar (normalization, seed, provenance). load_dataset
// reads the sidecar when it exists.
void save_dataset(const Dataset& ds, const std::string& csv_path, const std::string& sidecar_path);
Dataset load_dataset(const std::string& csv_path, const std::string& sidecar_path);
std::string sidecar_path_for(const std::string& csv_path);

// Constant features map to 0.5 (minmax01) or 0 (zscore). zscore uses the
// population standard deviation.
Dataset normalize(const Dataset& ds, NormalizationKind kind);
// Applies an existing normalization record to raw data.
Matrix apply_normalization(const Normalization& norm, const Matrix& raw);
Dataset denormalize(const Dataset& ds);

}  // namespace mdlvae
