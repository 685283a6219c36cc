#include "smoa/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "smoa/errors.hpp"

namespace smoa {

std::string shape_string(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

namespace {

void check_dims(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw DimensionError("matrix dimensions must be positive, got " + shape_string(rows, cols));
  }
}

void check_finite(std::span<const double> values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      throw NumericalError("non-finite matrix entry at flat index " + std::to_string(k));
    }
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a.rows(), a.cols()) +
                         " vs " + shape_string(b.rows(), b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double value)
    : rows_(rows), cols_(cols) {
  check_dims(rows, cols);
  if (!std::isfinite(value)) throw NumericalError("non-finite fill value");
  data_.assign(rows * cols, value);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  check_dims(rows, cols);
  if (data_.size() != rows * cols) {
    throw DimensionError("entry count " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(rows, cols));
  }
  check_finite(data_);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  check_dims(rows_, cols_);
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  check_finite(data_);
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::ones(std::size_t rows, std::size_t cols) { return Matrix(rows, cols, 1.0); }

Matrix Matrix::diagonal(std::span<const double> values) {
  return diagonal(values.size(), values.size(), values);
}

Matrix Matrix::diagonal(std::size_t rows, std::size_t cols, std::span<const double> values) {
  if (values.size() > std::min(rows, cols)) {
    throw DimensionError("too many diagonal values for shape " + shape_string(rows, cols));
  }
  check_finite(values);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

double Matrix::frobenius_norm() const {
  // Scaled accumulation so huge or tiny entries do not overflow/underflow.
  double scale = 0.0;
  double ssq = 1.0;
  for (double v : data_) {
    if (v == 0.0) continue;
    const double a = std::abs(v);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

bool Matrix::is_zero() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v == 0.0; });
}

Matrix& Matrix::operator+=(const Matrix& rhs) {
  require_same_shape(*this, rhs, "add");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& rhs) {
  require_same_shape(*this, rhs, "subtract");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= rhs.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ " + shape_string(a.rows(), a.cols()) +
                         " * " + shape_string(b.rows(), b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out = c.data().data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data().data() + k * n;
      for (std::size_t j = 0; j < n; ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c = a;
  auto out = c.data();
  auto rhs = b.data();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= rhs[k];
  return c;
}

double relative_error(const Matrix& a, const Matrix& b) {
  const double num = (a - b).frobenius_norm();
  const double den = b.frobenius_norm();
  if (den == 0.0) return num == 0.0 ? 0.0 : num;
  return num / den;
}

Matrix block_extract(const Matrix& w, Interval rows, Interval cols) {
  if (rows.begin >= rows.end || cols.begin >= cols.end || rows.end > w.rows() || cols.end > w.cols()) {
    throw RangeError("block [" + std::to_string(rows.begin + 1) + "," + std::to_string(rows.end) +
                     "]x[" + std::to_string(cols.begin + 1) + "," + std::to_string(cols.end) +
                     "] outside " + shape_string(w.rows(), w.cols()));
  }
  Matrix out(rows.length(), cols.length());
  for (std::size_t i = 0; i < rows.length(); ++i) {
    auto src = w.row(rows.begin + i).subspan(cols.begin, cols.length());
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * cols.length()));
  }
  return out;
}

Matrix block_diagonal(std::span<const Matrix> blocks) {
  if (blocks.empty()) throw ArgumentError("block_diagonal: empty block list");
  std::size_t rows = 0;
  std::size_t cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out(rows, cols);
  std::size_t r0 = 0;
  std::size_t c0 = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) out(r0 + i, c0 + j) = b(i, j);
    r0 += b.rows();
    c0 += b.cols();
  }
  return out;
}

Permutation::Permutation(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
  if (mapping_.empty()) throw ArgumentError("permutation size must be positive");
  std::vector<bool> seen(mapping_.size(), false);
  for (std::size_t v : mapping_) {
    if (v >= mapping_.size() || seen[v]) {
      throw ArgumentError("permutation mapping is not a bijection on " + std::to_string(mapping_.size()) +
                          " elements");
    }
    seen[v] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  return Permutation(std::move(m));
}

Permutation Permutation::from_one_based(std::span<const std::size_t> mapping) {
  std::vector<std::size_t> m;
  m.reserve(mapping.size());
  for (std::size_t v : mapping) {
    if (v == 0) throw ArgumentError("1-based permutation contains index 0");
    m.push_back(v - 1);
  }
  return Permutation(std::move(m));
}

std::vector<std::size_t> Permutation::one_based() const {
  std::vector<std::size_t> m(mapping_);
  for (auto& v : m) ++v;
  return m;
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(mapping_.size());
  for (std::size_t i = 0; i < mapping_.size(); ++i) inv[mapping_[i]] = i;
  return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& other) const {
  if (other.size() != size()) throw DimensionError("compose: permutation sizes differ");
  std::vector<std::size_t> m(size());
  for (std::size_t i = 0; i < size(); ++i) m[i] = mapping_[other.mapping_[i]];
  return Permutation(std::move(m));
}

bool Permutation::is_identity() const noexcept {
  for (std::size_t i = 0; i < mapping_.size(); ++i)
    if (mapping_[i] != i) return false;
  return true;
}

namespace {

void check_perm_sizes(const Matrix& w, const Permutation& p_out, const Permutation& p_in) {
  if (p_out.size() != w.rows() || p_in.size() != w.cols()) {
    throw DimensionError("permutation sizes (" + std::to_string(p_out.size()) + ", " +
                         std::to_string(p_in.size()) + ") do not match matrix " +
                         shape_string(w.rows(), w.cols()));
  }
}

}  // namespace

Matrix apply_permutations(const Matrix& w, const Permutation& p_out, const Permutation& p_in) {
  check_perm_sizes(w, p_out, p_in);
  Matrix out(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) out(i, j) = w(p_out.at(i), p_in.at(j));
  return out;
}

Matrix invert_permutations(const Matrix& w_tilde, const Permutation& p_out, const Permutation& p_in) {
  check_perm_sizes(w_tilde, p_out, p_in);
  Matrix out(w_tilde.rows(), w_tilde.cols());
  for (std::size_t i = 0; i < w_tilde.rows(); ++i)
    for (std::size_t j = 0; j < w_tilde.cols(); ++j) out(p_out.at(i), p_in.at(j)) = w_tilde(i, j);
  return out;
}

}  // namespace smoa
