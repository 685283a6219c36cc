#include <cmath>

#include "doctest.h"
#include "support.hpp"

#include "smoa/errors.hpp"
#include "smoa/spectrum.hpp"

using namespace smoa;
using smoa::testing::random_matrix;

namespace {

double orthonormality_defect(const Matrix& q) {
  const Matrix g = q.transpose() * q;
  return smoa::testing::max_abs_diff(g, Matrix::identity(g.rows()));
}

}  // namespace

TEST_CASE("svd of the identity") {
  const auto d = svd(Matrix::identity(5));
  for (double s : d.singular_values) CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("svd of diag(3,2,1) is axis aligned") {
  const auto d = svd(Matrix::diagonal(std::vector<double>{3, 2, 1}));
  CHECK(d.singular_values == std::vector<double>{3, 2, 1});
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(std::abs(d.left(k, k)) == doctest::Approx(1.0));
    CHECK(std::abs(d.right(k, k)) == doctest::Approx(1.0));
    CHECK(d.left(k, k) > 0.0);
  }
}

TEST_CASE("svd invariants on random rectangular matrices") {
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{16, 12}, {12, 16}, {9, 9}, {1, 7}, {7, 1}, {40, 3}}) {
    const Matrix w = random_matrix(r, c, r * 31 + c);
    const auto d = svd(w);
    const std::size_t m = std::min(r, c);
    REQUIRE(d.singular_values.size() == m);
    CHECK(d.left.rows() == r);
    CHECK(d.left.cols() == m);
    CHECK(d.right.rows() == c);
    CHECK(d.right.cols() == m);
    CHECK(std::is_sorted(d.singular_values.rbegin(), d.singular_values.rend()));
    CHECK(d.singular_values.back() >= 0.0);
    CHECK(orthonormality_defect(d.left) < 1e-10);
    CHECK(orthonormality_defect(d.right) < 1e-10);
    CHECK(relative_error(d.reconstruct(), w) < 1e-10);
    for (std::size_t k = 0; k < m; ++k) {
      std::size_t first = 0;
      while (first < r && std::abs(d.left(first, k)) <= 1e-10) ++first;
      CHECK(d.left(first, k) > 0.0);
    }
  }
}

TEST_CASE("singular values agree with an independent SVD") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Matrix w = random_matrix(10 + seed, 8 + 2 * seed, seed);
    const auto ours = singular_values(w);
    const auto ref = smoa::testing::oracle_singular_values(w);
    REQUIRE(ours.size() == static_cast<std::size_t>(ref.size()));
    for (std::size_t i = 0; i < ours.size(); ++i) CHECK(std::abs(ours[i] - ref[i]) <= 1e-12 * ref[0]);
  }
}

TEST_CASE("rank-deficient input keeps orthonormal left vectors") {
  Rng rng(5);
  const Matrix w = gaussian_matrix(8, 2, rng) * gaussian_matrix(2, 6, rng);
  const auto d = svd(w);
  CHECK(orthonormality_defect(d.left) < 1e-10);
  CHECK(orthonormality_defect(d.right) < 1e-10);
  CHECK(numerical_rank(w) == 2);
  const auto z = svd(Matrix(4, 3));
  CHECK(orthonormality_defect(z.left) < 1e-12);
  CHECK(z.singular_values == std::vector<double>{0, 0, 0});
}

TEST_CASE("numerical_rank examples") {
  CHECK(numerical_rank(Matrix(4, 4), 1e-3) == 0);
  CHECK(numerical_rank(Matrix::diagonal(std::vector<double>{3, 2, 1}), 1.5) == 2);
  CHECK(numerical_rank(Matrix::identity(6), 0.5) == 6);
  CHECK(numerical_rank(Matrix::diagonal(std::vector<double>{3, 2, 1}), 2.0) == 1);
  CHECK_THROWS_AS(numerical_rank(Matrix::identity(2), -1.0), RangeError);
}

TEST_CASE("default tolerance counts every value above it") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const Matrix w = gaussian_matrix(12, 3 + seed, rng) * gaussian_matrix(3 + seed, 10, rng);
    const auto sv = singular_values(w);
    const double eps = default_rank_tolerance(w);
    CHECK(eps == doctest::Approx(12.0 * sv.front() * std::numeric_limits<double>::epsilon()));
    const auto expected =
        static_cast<std::size_t>(std::count_if(sv.begin(), sv.end(), [&](double s) { return s > eps; }));
    CHECK(numerical_rank(w) == expected);
    CHECK(numerical_rank(w) == 3 + seed);
  }
}

TEST_CASE("truncated_svd examples") {
  const Matrix w = random_matrix(7, 5, 3);
  CHECK(relative_error(truncated_svd(w, 5), w) < 1e-10);
  const Matrix id = Matrix::identity(3);
  CHECK((id - truncated_svd(id, 2)).squared_norm() == doctest::Approx(1.0));
  CHECK(truncated_svd(w, 0).is_zero());
  CHECK_THROWS_AS(truncated_svd(w, 6), RangeError);

  const Matrix w2 = random_matrix(10, 8, 4);
  const auto ref = smoa::testing::oracle_singular_values(w2);
  double tail = 0.0;
  for (Eigen::Index i = 3; i < ref.size(); ++i) tail += ref[i] * ref[i];
  const double err = (w2 - truncated_svd(w2, 3)).squared_norm();
  CHECK(std::abs(err - tail) / tail < 1e-10);
  CHECK(numerical_rank(truncated_svd(w2, 3)) == 3);
}

TEST_CASE("tail_energy examples") {
  const Matrix w = random_matrix(6, 6, 8);
  CHECK(tail_energy(w, 6) == 0.0);
  CHECK(tail_energy(Matrix::diagonal(std::vector<double>{3, 2, 1}), 1) == doctest::Approx(5.0).epsilon(1e-14));
  const Matrix w12 = random_matrix(12, 12, 9);
  const double explicit_residual = (w12 - truncated_svd(w12, 4)).squared_norm();
  CHECK(std::abs(tail_energy(w12, 4) - explicit_residual) / explicit_residual < 1e-10);
  CHECK_THROWS_AS(tail_energy(w12, 13), RangeError);
}

TEST_CASE("tail_energy is monotone and starts at the squared norm") {
  const Matrix w = random_matrix(9, 14, 10);
  CHECK(std::abs(tail_energy(w, 0) - w.squared_norm()) / w.squared_norm() < 1e-12);
  double prev = tail_energy(w, 0);
  for (std::size_t r = 1; r <= 9; ++r) {
    const double e = tail_energy(w, r);
    CHECK(e <= prev);
    prev = e;
  }
}

TEST_CASE("symmetric eigen decomposition") {
  const Matrix a = random_matrix(7, 7, 12);
  const Matrix s = a * a.transpose();
  const auto eig = symmetric_eigen(s);
  CHECK(std::is_sorted(eig.values.rbegin(), eig.values.rend()));
  CHECK(orthonormality_defect(eig.vectors) < 1e-10);
  const Matrix back = eig.vectors * Matrix::diagonal(eig.values) * eig.vectors.transpose();
  CHECK(relative_error(back, s) < 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(smoa::testing::to_eigen(s));
  for (std::size_t i = 0; i < 7; ++i) CHECK(eig.values[i] == doctest::Approx(ref.eigenvalues()[6 - i]).epsilon(1e-10));
  CHECK_THROWS_AS(symmetric_eigen(Matrix(2, 3)), DimensionError);
}

TEST_CASE("svd converges on matrices with repeated and zero rows") {
  Matrix w = random_matrix(6, 6, 13);
  for (std::size_t j = 0; j < 6; ++j) {
    w(4, j) = w(1, j);
    w(5, j) = 0.0;
  }
  const auto d = svd(w);
  CHECK(relative_error(d.reconstruct(), w) < 1e-10);
  CHECK(orthonormality_defect(d.left) < 1e-10);
  CHECK(numerical_rank(w) == 4);
  CHECK(d.singular_values[4] == 0.0);
  CHECK(d.singular_values[5] == 0.0);
}

TEST_CASE("small singular values of a graded matrix stay accurate") {
  Rng rng(14);
  const Matrix u = random_orthonormal(10, 6, rng);
  const Matrix v = random_orthonormal(8, 6, rng);
  const std::vector<double> sigma{1.0, 1e-2, 1e-4, 1e-6, 1e-9, 1e-12};
  const Matrix w = u * Matrix::diagonal(sigma) * v.transpose();
  const auto ours = singular_values(w);
  for (std::size_t i = 0; i < sigma.size(); ++i) CHECK(std::abs(ours[i] - sigma[i]) <= 1e-14);
  CHECK(ours[6] <= 1e-15);
}
