#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mdlvae/numerics.hpp"

namespace mdlvae {

// Two-part code constants.
inline constexpr double kParamBits = 32.0;     // bits per stored real parameter
inline constexpr double kQuantBits = 20.0;     // residual quantization offset
inline constexpr double kVarianceFloor = 1e-12;

struct DescriptionLength {
  double model_bits = 0.0;
  double data_bits = 0.0;
  double total_bits = 0.0;
};

// Bits for one residual scalar under a Gaussian code with the given residual
// variance, floored at zero.
double residual_bits_per_scalar(double residual_variance);

// PCA fitted on a sample: column means and the eigendecomposition of the
// (n - 1)-normalized covariance, eigenvalues clamped at zero.
struct PcaFit {
  Vector mean;
  EigenDecomposition eig;
};

PcaFit fit_pca(const Matrix& x);

struct CompressionResult {
  Vector mean;
  Matrix basis;  // d x k, orthonormal columns
  std::size_t rank = 0;
  Matrix codes;  // n x k
  DescriptionLength dl;
  double residual_sigma = 0.0;
};

// L(model) counts basis, mean and codes; L(data | model) codes the rank-k
// residuals. Requires n >= 2 and 1 <= k <= d.
DescriptionLength description_length(const Matrix& x, std::size_t rank);

// Description length for every k in 1..d from a single eigendecomposition.
// Entry i holds k = i + 1.
std::vector<DescriptionLength> description_length_scan(const Matrix& x);

// Rank with the smallest total description length; ties go to the smaller k.
std::size_t select_rank(const Matrix& x);
// The same rule applied to a precomputed scan (entry i holds k = i + 1).
std::size_t rank_from_scan(std::span<const DescriptionLength> scan);

CompressionResult compress(const Matrix& x, std::size_t rank);
Matrix decompress(const CompressionResult& c);

// Codes of new rows under an existing fit: (x - mean) * basis.
Matrix project(const CompressionResult& c, const Matrix& x);
// Rows back in the original space: codes * basis^T + mean.
Matrix reconstruct_codes(const CompressionResult& c, const Matrix& codes);

double compression_efficiency(std::size_t d, std::size_t k);
// Mean row-wise cosine similarity between x and its reconstruction.
double semantic_preservation(const Matrix& x, const Matrix& x_rec);

}  // namespace mdlvae
