#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "support.hpp"

#include "smoa/errors.hpp"
#include "smoa/matrix_io.hpp"
#include "smoa/spectrum.hpp"

using namespace smoa;
using smoa::testing::random_matrix;

namespace {

Permutation random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return Permutation(idx);
}

}  // namespace

TEST_CASE("matrix constructors validate shape and finiteness") {
  CHECK_THROWS_AS(Matrix(0, 3), DimensionError);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Matrix(1, 2, std::vector<double>{1, std::numeric_limits<double>::quiet_NaN()}), NumericalError);
  CHECK_THROWS_AS(Matrix(1, 1, std::numeric_limits<double>::infinity()), NumericalError);
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 6);
  CHECK(m.transpose()(2, 1) == 6);
}

TEST_CASE("hadamard examples") {
  const Matrix a{{1, 2}, {3, 4}};
  CHECK(hadamard(a, Matrix(2, 2)) == Matrix(2, 2));
  CHECK(hadamard(a, Matrix::ones(2, 2)) == a);
  CHECK(hadamard(a, Matrix{{2, 0}, {0, 2}}) == Matrix{{2, 0}, {0, 8}});
}

TEST_CASE("hadamard rejects shape mismatch and names both shapes") {
  try {
    (void)hadamard(Matrix(2, 3), Matrix(3, 2));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("3x2") != std::string::npos);
  }
}

TEST_CASE("hadamard is commutative and associative") {
  const Matrix a = random_matrix(5, 4, 1);
  const Matrix b = random_matrix(5, 4, 2);
  const Matrix c = random_matrix(5, 4, 3);
  CHECK(hadamard(a, b) == hadamard(b, a));
  CHECK(smoa::testing::max_abs_diff(hadamard(hadamard(a, b), c), hadamard(a, hadamard(b, c))) < 1e-15);
}

TEST_CASE("apply_permutations examples") {
  const Matrix w = random_matrix(6, 4, 10);
  CHECK(apply_permutations(w, Permutation::identity(6), Permutation::identity(4)) == w);

  const Matrix two{{1, 2}, {3, 4}};
  const Permutation swap(std::vector<std::size_t>{1, 0});
  CHECK(apply_permutations(two, swap, Permutation::identity(2)) == Matrix{{3, 4}, {1, 2}});

  const Matrix wt = apply_permutations(w, random_permutation(6, 1), random_permutation(4, 2));
  CHECK(std::abs(wt.frobenius_norm() - w.frobenius_norm()) / w.frobenius_norm() < 1e-12);
  CHECK_THROWS_AS(apply_permutations(w, Permutation::identity(4), Permutation::identity(4)), DimensionError);
}

TEST_CASE("apply_permutations follows the index rule") {
  const Matrix w = random_matrix(5, 3, 4);
  const Permutation po = random_permutation(5, 7);
  const Permutation pi = random_permutation(3, 8);
  const Matrix wt = apply_permutations(w, po, pi);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(wt(i, j) == w(po.at(i), pi.at(j)));
}

TEST_CASE("permutation roundtrip is bit exact") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix w8 = random_matrix(8, 8, seed);
    const auto p = random_permutation(8, seed + 100);
    const auto q = random_permutation(8, seed + 200);
    CHECK(invert_permutations(apply_permutations(w8, p, q), p, q) == w8);
  }
  const Matrix w = random_matrix(6, 4, 33);
  CHECK(invert_permutations(w, Permutation::identity(6), Permutation::identity(4)) == w);
  const auto p = random_permutation(6, 3);
  const auto q = random_permutation(4, 4);
  CHECK(invert_permutations(apply_permutations(w, p, q), p, q) == w);
}

TEST_CASE("permutation algebra") {
  const auto p = random_permutation(9, 5);
  CHECK(p.compose(p.inverse()).is_identity());
  CHECK(p.inverse().compose(p).is_identity());
  CHECK(Permutation::from_one_based(p.one_based()) == p);
  CHECK_THROWS_AS(Permutation(std::vector<std::size_t>{0, 0, 1}), ArgumentError);
  CHECK_THROWS_AS(Permutation(std::vector<std::size_t>{0, 3}), ArgumentError);
  CHECK_THROWS_AS(Permutation::from_one_based(std::vector<std::size_t>{0, 1}), ArgumentError);
}

TEST_CASE("permutations preserve singular values") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Matrix w = random_matrix(32, 24, seed);
    const auto a = singular_values(w);
    const auto b = singular_values(apply_permutations(w, random_permutation(32, seed), random_permutation(24, seed + 9)));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-10 * a.front());
  }
}

TEST_CASE("block_extract examples") {
  const Matrix id = Matrix::identity(4);
  CHECK(block_extract(id, {0, 4}, {0, 4}) == id);
  CHECK(block_extract(id, {0, 2}, {2, 4}) == Matrix(2, 2));
  CHECK(block_extract(id, {0, 2}, {0, 2}) == Matrix::identity(2));
  CHECK_THROWS_AS(block_extract(id, {2, 5}, {0, 1}), RangeError);
  CHECK_THROWS_AS(block_extract(id, {2, 2}, {0, 1}), RangeError);
}

TEST_CASE("block_diagonal examples") {
  const Matrix b = random_matrix(3, 2, 1);
  CHECK(block_diagonal(std::vector<Matrix>{b}) == b);
  CHECK(block_diagonal(std::vector<Matrix>{Matrix{{5}}, Matrix{{7}}}) == Matrix{{5, 0}, {0, 7}});
  CHECK(block_diagonal(std::vector<Matrix>{Matrix::identity(2), Matrix::identity(2)}) == Matrix::identity(4));
  CHECK_THROWS_AS(block_diagonal(std::vector<Matrix>{}), ArgumentError);

  const Matrix mixed = block_diagonal(std::vector<Matrix>{Matrix(2, 3, 1.0), Matrix(1, 2, 2.0)});
  CHECK(mixed.rows() == 3);
  CHECK(mixed.cols() == 5);
  CHECK(mixed(2, 4) == 2.0);
  CHECK(mixed(0, 4) == 0.0);
  CHECK(mixed(2, 0) == 0.0);
}

TEST_CASE("matmul and arithmetic") {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{0, 1}, {1, 0}};
  CHECK(a * b == Matrix{{2, 1}, {4, 3}});
  CHECK(a + a == 2.0 * a);
  CHECK((a - a).is_zero());
  CHECK_THROWS_AS(a * Matrix(3, 1), DimensionError);
  CHECK(a.squared_norm() == 30.0);
}

TEST_CASE("SMOA-MAT binary roundtrip is bit exact") {
  const Matrix w = random_matrix(7, 3, 77);
  const std::string bytes = io::encode_binary(w);
  CHECK(bytes.substr(0, 8) == "SMOA-MAT");
  CHECK(static_cast<unsigned char>(bytes[8]) == 0x01);
  CHECK(bytes.size() == 9 + 16 + 7 * 3 * 8);
  CHECK(io::decode_binary(bytes) == w);
  CHECK_THROWS_AS(io::decode_binary(bytes.substr(0, 20)), IoError);
  CHECK_THROWS_AS(io::decode_binary("NOT-A-MATRIX-FILE-AT-ALL"), IoError);
}

TEST_CASE("CSV roundtrip is bit exact") {
  Matrix w = random_matrix(4, 5, 78);
  w(0, 0) = 0.1;
  w(1, 1) = -1e-300;
  w(2, 2) = 123456789.123456789;
  const std::string text = io::encode_csv(w);
  CHECK(text.rfind("4,5\n", 0) == 0);
  CHECK(io::decode_csv(text) == w);
  CHECK_THROWS_AS(io::decode_csv("2,2\n1,2\n3\n"), IoError);
  CHECK_THROWS_AS(io::decode_csv("2,2\n1,x\n3,4\n"), IoError);
}

TEST_CASE("sha256 matches a known digest") {
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
