#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace smoa {

/// Dense real matrix, row-major, double precision.
///
/// Every constructor rejects non-finite entries and zero dimensions. The
/// mutable element accessor exists for building values in place; code that
/// writes through it is responsible for keeping entries finite.
class Matrix {
 public:
  /// rows x cols filled with `value`.
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0);
  /// Takes ownership of row-major `entries`; length must be rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  /// Nested initializer, one inner list per row.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix ones(std::size_t rows, std::size_t cols);
  static Matrix diagonal(std::span<const double> values);
  static Matrix diagonal(std::size_t rows, std::size_t cols, std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  Matrix transpose() const;
  double frobenius_norm() const;
  double squared_norm() const;
  bool is_zero() const noexcept;

  Matrix& operator+=(const Matrix& rhs);
  Matrix& operator-=(const Matrix& rhs);
  Matrix& operator*=(double s) noexcept;

  /// Bitwise comparison of shape and entries.
  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
/// Matrix product.
Matrix operator*(const Matrix& a, const Matrix& b);

/// Elementwise product; shapes must agree.
Matrix hadamard(const Matrix& a, const Matrix& b);

/// Frobenius norm of a - b divided by the norm of b (0 when both vanish).
double relative_error(const Matrix& a, const Matrix& b);

/// Contiguous index range [begin, end), 0-based. Files and reports print the
/// closed 1-based form [begin + 1, end].
struct Interval {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - begin; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

Matrix block_extract(const Matrix& w, Interval rows, Interval cols);
Matrix block_diagonal(std::span<const Matrix> blocks);

/// Bijection on {0, ..., size-1}. `at(i)` is the source coordinate placed at
/// position i, i.e. pi(i) in 0-based form.
class Permutation {
 public:
  explicit Permutation(std::vector<std::size_t> mapping);

  static Permutation identity(std::size_t n);
  /// Builds from a 1-based index array as stored in plan files.
  static Permutation from_one_based(std::span<const std::size_t> mapping);

  std::size_t size() const noexcept { return mapping_.size(); }
  std::size_t at(std::size_t i) const noexcept { return mapping_[i]; }
  std::span<const std::size_t> mapping() const noexcept { return mapping_; }
  std::vector<std::size_t> one_based() const;

  Permutation inverse() const;
  /// (this o other)(i) = this(other(i)).
  Permutation compose(const Permutation& other) const;
  bool is_identity() const noexcept;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> mapping_;
};

/// W~[i, j] = W[p_out(i), p_in(j)].
Matrix apply_permutations(const Matrix& w, const Permutation& p_out, const Permutation& p_in);
/// Inverse of apply_permutations: W[p_out(i), p_in(j)] = W~[i, j].
Matrix invert_permutations(const Matrix& w_tilde, const Permutation& p_out, const Permutation& p_in);

}  // namespace smoa
