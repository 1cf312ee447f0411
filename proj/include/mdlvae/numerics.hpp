#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace mdlvae {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Rows are samples (or terms), columns are
// dimensions.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Throws a shape error if data.size() != rows * cols and a numeric error on
  // any non-finite entry.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  Matrix transposed() const;
  Vector column(std::size_t c) const;
  // Copies the listed rows, in order.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix mat_mul(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose.
Matrix mat_mul_transposed(const Matrix& a, const Matrix& b);
// a^T * b without materializing the transpose.
Matrix mat_transposed_mul(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
Vector column_means(const Matrix& x);

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // column j pairs with values[j]
};

// Cyclic Jacobi rotations. Input must be square and symmetric within 1e-10
// (scaled by the largest entry). Each eigenvector is sign-normalized so that
// its largest-magnitude component is positive.
EigenDecomposition sym_eig(const Matrix& a);

inline constexpr int kJacobiMaxSweeps = 100;
inline constexpr double kJacobiTolerance = 1e-12;

// SplitMix64 (Steele, Lea & Flood, "Fast splittable pseudorandom number
// generators", OOPSLA 2014). Normal variates use the Box-Muller transform and
// cache the second value of each pair. Streams depend only on the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept : seed_(seed), state_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double normal() noexcept;
  // Uniform integer in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n) noexcept;

  template <class T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Vector rng_normal(Rng& rng, std::size_t n);
Matrix rng_normal_matrix(Rng& rng, std::size_t rows, std::size_t cols);

// CDF of Student's t with df degrees of freedom, through the regularized
// incomplete beta function.
double student_t_cdf(double t, double df);
// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double x, double a, double b);

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
Vector finite_diff_gradient(const ScalarFunction& f, std::span<const double> x, double h);

}  // namespace mdlvae
