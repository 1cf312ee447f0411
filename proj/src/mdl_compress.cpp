#include "mdlvae/mdl_compress.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mdlvae/embedding.hpp"
#include "mdlvae/error.hpp"

namespace mdlvae {

namespace {

void check_rank(const Matrix& x, std::size_t rank) {
  if (x.rows() < 2) fail(ErrorKind::domain, "description length needs at least two rows");
  if (rank < 1 || rank > x.cols()) {
    fail(ErrorKind::domain, "rank " + std::to_string(rank) + " outside 1.." + std::to_string(x.cols()));
  }
}

Matrix centered(const Matrix& x, const Vector& mean) {
  Matrix c = x;
  for (std::size_t r = 0; r < c.rows(); ++r) {
    auto row = c.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] -= mean[j];
  }
  return c;
}

Matrix leading_basis(const PcaFit& fit, std::size_t rank) {
  const std::size_t d = fit.eig.vectors.rows();
  Matrix basis(d, rank);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < rank; ++j) basis(i, j) = fit.eig.vectors(i, j);
  return basis;
}

DescriptionLength assemble(std::size_t n, std::size_t d, std::size_t k, double residual_ss) {
  const double nd = static_cast<double>(n) * static_cast<double>(d);
  DescriptionLength dl;
  dl.model_bits = kParamBits * static_cast<double>(d * k + d + n * k);
  dl.data_bits = nd * residual_bits_per_scalar(residual_ss / nd);
  dl.total_bits = dl.model_bits + dl.data_bits;
  return dl;
}

double sum_of_squares(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

double residual_bits_per_scalar(double residual_variance) {
  const double bits =
      0.5 * std::log2(2.0 * std::numbers::pi * std::numbers::e * (residual_variance + kVarianceFloor)) +
      kQuantBits;
  return std::max(0.0, bits);
}

PcaFit fit_pca(const Matrix& x) {
  if (x.rows() < 2) fail(ErrorKind::domain, "PCA needs at least two rows");
  PcaFit fit;
  fit.mean = column_means(x);
  const Matrix c = centered(x, fit.mean);
  Matrix cov = mat_transposed_mul(c, c);
  const double denom = static_cast<double>(x.rows() - 1);
  for (double& v : cov.data()) v /= denom;
  fit.eig = sym_eig(cov);
  for (double& v : fit.eig.values) v = std::max(v, 0.0);
  return fit;
}

DescriptionLength description_length(const Matrix& x, std::size_t rank) {
  check_rank(x, rank);
  const PcaFit fit = fit_pca(x);
  const Matrix c = centered(x, fit.mean);
  const Matrix basis = leading_basis(fit, rank);
  const Matrix codes = mat_mul(c, basis);
  const Matrix approx = mat_mul_transposed(codes, basis);
  double ss = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double r = c.data()[i] - approx.data()[i];
    ss += r * r;
  }
  return assemble(x.rows(), x.cols(), rank, ss);
}

std::vector<DescriptionLength> description_length_scan(const Matrix& x) {
  check_rank(x, 1);
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const PcaFit fit = fit_pca(x);
  const Matrix c = centered(x, fit.mean);
  Matrix residual = c;
  std::vector<DescriptionLength> out;
  out.reserve(d);
  Vector proj(n);
  for (std::size_t k = 1; k <= d; ++k) {
    const std::size_t j = k - 1;
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = c.row(r);
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += row[i] * fit.eig.vectors(i, j);
      proj[r] = s;
    }
    for (std::size_t r = 0; r < n; ++r) {
      auto row = residual.row(r);
      for (std::size_t i = 0; i < d; ++i) row[i] -= proj[r] * fit.eig.vectors(i, j);
    }
    out.push_back(assemble(n, d, k, sum_of_squares(residual.data())));
  }
  return out;
}

std::size_t select_rank(const Matrix& x) { return rank_from_scan(description_length_scan(x)); }

std::size_t rank_from_scan(std::span<const DescriptionLength> scan) {
  if (scan.empty()) fail(ErrorKind::domain, "rank_from_scan: empty scan");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scan.size(); ++i)
    if (scan[i].total_bits < scan[best].total_bits) best = i;
  return best + 1;
}

CompressionResult compress(const Matrix& x, std::size_t rank) {
  check_rank(x, rank);
  const PcaFit fit = fit_pca(x);
  CompressionResult out;
  out.mean = fit.mean;
  out.rank = rank;
  out.basis = leading_basis(fit, rank);
  const Matrix c = centered(x, fit.mean);
  out.codes = mat_mul(c, out.basis);
  const Matrix approx = mat_mul_transposed(out.codes, out.basis);
  double ss = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double r = c.data()[i] - approx.data()[i];
    ss += r * r;
  }
  out.dl = assemble(x.rows(), x.cols(), rank, ss);
  out.residual_sigma = std::sqrt(ss / static_cast<double>(x.size()));
  return out;
}

Matrix reconstruct_codes(const CompressionResult& c, const Matrix& codes) {
  if (codes.cols() != c.rank) fail(ErrorKind::shape, "code width does not match compression rank");
  Matrix out = mat_mul_transposed(codes, c.basis);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += c.mean[j];
  }
  return out;
}

Matrix decompress(const CompressionResult& c) { return reconstruct_codes(c, c.codes); }

Matrix project(const CompressionResult& c, const Matrix& x) {
  if (x.cols() != c.mean.size()) fail(ErrorKind::shape, "input width does not match compression mean");
  return mat_mul(centered(x, c.mean), c.basis);
}

double compression_efficiency(std::size_t d, std::size_t k) {
  if (k == 0 || k > d) fail(ErrorKind::domain, "compression_efficiency: need 1 <= k <= d");
  return static_cast<double>(d) / static_cast<double>(k);
}

double semantic_preservation(const Matrix& x, const Matrix& x_rec) {
  if (x.rows() != x_rec.rows() || x.cols() != x_rec.cols())
    fail(ErrorKind::shape, "semantic_preservation: shapes differ");
  if (x.rows() == 0) fail(ErrorKind::domain, "semantic_preservation: no rows");
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) total += cosine_similarity(x.row(r), x_rec.row(r));
  return total / static_cast<double>(x.rows());
}

}  // namespace mdlvae
