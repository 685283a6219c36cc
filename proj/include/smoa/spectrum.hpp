#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smoa/matrix.hpp"

namespace smoa {

struct SvdOptions {
  /// Jacobi sweeps before giving up with NumericalError.
  int max_sweeps = 80;
};

/// Thin SVD W = U diag(sigma) V^T with m = min(rows, cols) triplets.
///
/// Singular values are descending and nonnegative; U is rows x m and V is
/// cols x m, both with orthonormal columns. Signs are fixed so that the first
/// entry of each left vector with magnitude above 1e-10 is positive.
struct SpectralDecomposition {
  Matrix left;
  std::vector<double> singular_values;
  Matrix right;

  std::size_t rank_count() const noexcept { return singular_values.size(); }
  Matrix reconstruct() const;
};

/// One-sided (Hestenes) Jacobi SVD.
SpectralDecomposition svd(const Matrix& w, const SvdOptions& options = {});
std::vector<double> singular_values(const Matrix& w, const SvdOptions& options = {});

/// max(rows, cols) * sigma_1 * DBL_EPSILON.
double default_rank_tolerance(std::size_t rows, std::size_t cols, double sigma_max);
double default_rank_tolerance(const Matrix& w);

/// Number of singular values strictly greater than epsilon.
std::size_t count_above(std::span<const double> singular_values, double epsilon);
std::size_t numerical_rank(const Matrix& w, double epsilon);
std::size_t numerical_rank(const Matrix& w);

/// Best Frobenius approximation of rank at most r (Eckart-Young).
Matrix truncated_svd(const Matrix& w, std::size_t r);

/// Sum of sigma_i^2 for i > r, accumulated from the smallest value upward.
double tail_energy(std::span<const double> singular_values, std::size_t r);
double tail_energy(const Matrix& w, std::size_t r);

struct SymmetricEigen {
  std::vector<double> values;  ///< descending
  Matrix vectors;              ///< eigenvectors as columns
};

/// Cyclic Jacobi eigensolver for symmetric input (symmetrized internally).
SymmetricEigen symmetric_eigen(const Matrix& s, int max_sweeps = 80);

}  // namespace smoa
