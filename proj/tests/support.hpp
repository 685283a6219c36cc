#pragma once

#include <Eigen/Dense>

#include "smoa/matrix.hpp"
#include "smoa/random.hpp"

namespace smoa::testing {

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix out(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) out(i, j) = e(i, j);
  return out;
}

// Singular values from Eigen's bidiagonal divide-and-conquer SVD, descending.
inline Eigen::VectorXd oracle_singular_values(const Matrix& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(to_eigen(m));
  return svd.singularValues();
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  return gaussian_matrix(rows, cols, rng);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

}  // namespace smoa::testing
