#include <cmath>

#include "doctest.h"
#include "support.hpp"

#include "smoa/errors.hpp"
#include "smoa/matrix_io.hpp"
#include "smoa/preprocess.hpp"

using namespace smoa;
using smoa::testing::random_matrix;

namespace {

void check_plan_invariants(const BlockPlan& plan, const Matrix& w0) {
  const std::size_t k = plan.k();
  REQUIRE(w0.rows() % k == 0);
  REQUIRE(w0.cols() % k == 0);
  const Matrix reordered = reordered_weight(plan, w0);
  std::size_t next_row = 0;
  std::size_t next_col = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const Interval rows = plan.row_interval(b);
    const Interval cols = plan.col_interval(b);
    CHECK(rows.begin == next_row);
    CHECK(cols.begin == next_col);
    CHECK(rows.end - rows.begin == w0.rows() / k);
    CHECK(cols.end - cols.begin == w0.cols() / k);
    next_row = rows.end;
    next_col = cols.end;
    CHECK(plan.anchor(b) == block_extract(reordered, rows, cols));
  }
  CHECK(next_row == w0.rows());
  CHECK(next_col == w0.cols());
  CHECK(invert_permutations(reordered, plan.p_out(), plan.p_in()) == w0);
}

}  // namespace

TEST_CASE("K=1 keeps the identity ordering and the whole matrix as anchor") {
  const Matrix w0 = random_matrix(5, 7, 1);
  const BlockPlan plan = build_plan(w0, 1);
  CHECK(plan.p_out().is_identity());
  CHECK(plan.p_in().is_identity());
  REQUIRE(plan.anchors().size() == 1);
  CHECK(plan.anchor(0) == w0);
  CHECK(reordered_weight(plan, w0) == w0);
}

TEST_CASE("K=2 on diag(4,3,2,1)") {
  const Matrix w0 = Matrix::diagonal(std::vector<double>{4, 3, 2, 1});
  const BlockPlan plan = build_plan(w0, 2);
  check_plan_invariants(plan, w0);
  CHECK(plan.anchor(0) == Matrix{{4, 0}, {0, 3}});
  CHECK(plan.anchor(1) == Matrix{{2, 0}, {0, 1}});
}

TEST_CASE("K=2 on a random 8x6 matrix") {
  const Matrix w0 = random_matrix(8, 6, 2);
  const BlockPlan plan = build_plan(w0, 2);
  check_plan_invariants(plan, w0);
  for (const auto& a : plan.anchors()) {
    CHECK(a.rows() == 4);
    CHECK(a.cols() == 3);
  }
  CHECK(plan.source_hash() == io::matrix_hash(w0));
}

TEST_CASE("divisibility violations name rows, cols and k") {
  const Matrix w0 = random_matrix(6, 4, 3);
  try {
    (void)build_plan(w0, 3);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("6") != std::string::npos);
    CHECK(msg.find("4") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
  CHECK_THROWS_AS(build_plan(w0, 0), ConfigError);
  CHECK_THROWS_AS(build_plan(w0, 8), ConfigError);
}

TEST_CASE("coordinate scores of a diagonal matrix are the coordinate indices") {
  const auto scores = coordinate_scores(svd(Matrix::diagonal(std::vector<double>{5, 4, 3, 2, 1})));
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(scores.output[i] == doctest::Approx(static_cast<double>(i + 1)));
    CHECK(scores.input[i] == doctest::Approx(static_cast<double>(i + 1)));
  }
}

TEST_CASE("identical rows get identical scores and keep index order") {
  Matrix w0 = random_matrix(6, 6, 4);
  for (std::size_t j = 0; j < 6; ++j) w0(4, j) = w0(1, j);
  const auto scores = coordinate_scores(svd(w0));
  CHECK(scores.output[1] == doctest::Approx(scores.output[4]).epsilon(1e-12));
  const Permutation p = order_by_score({2.0, 1.0, 2.0, 0.5});
  CHECK(p.one_based() == std::vector<std::size_t>{4, 2, 1, 3});
}

TEST_CASE("coordinate scores match a direct evaluation of the centroid formula") {
  const Matrix w0 = random_matrix(8, 8, 5);
  const auto d = svd(w0);
  const auto scores = coordinate_scores(d);
  const std::size_t m = d.singular_values.size();
  for (std::size_t i = 0; i < 8; ++i) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double e = d.singular_values[j] * d.right(i, j) * d.right(i, j);
      num += static_cast<double>(j + 1) * e;
      den += e;
    }
    CHECK(scores.input[i] == doctest::Approx(num / den).epsilon(1e-12));
    CHECK(scores.output[i] >= 1.0);
    CHECK(scores.output[i] <= static_cast<double>(m + 1));
  }
}

TEST_CASE("zero-energy coordinates score m+1") {
  Matrix w0 = random_matrix(4, 4, 6);
  for (std::size_t j = 0; j < 4; ++j) w0(2, j) = 0.0;
  const auto scores = coordinate_scores(svd(w0));
  CHECK(scores.output[2] == 5.0);
  const BlockPlan plan = build_plan(w0, 2);
  CHECK(plan.p_out().at(3) == 2);
}

TEST_CASE("plans are deterministic and sorted within the reordered axis") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Matrix w0 = random_matrix(12, 8, seed + 40);
    for (std::size_t k : {2, 4}) {
      const BlockPlan a = build_plan(w0, k);
      const BlockPlan b = build_plan(w0, k);
      CHECK(a == b);
      check_plan_invariants(a, w0);
      const auto scores = coordinate_scores(svd(w0));
      for (std::size_t i = 1; i < 12; ++i) {
        CHECK(scores.output[a.p_out().at(i - 1)] <= scores.output[a.p_out().at(i)]);
      }
      for (std::size_t j = 1; j < 8; ++j) {
        CHECK(scores.input[a.p_in().at(j - 1)] <= scores.input[a.p_in().at(j)]);
      }
    }
  }
}

TEST_CASE("reordering preserves norm and spectrum") {
  const Matrix w0 = random_matrix(10, 6, 7);
  const BlockPlan plan = build_plan(w0, 2);
  const Matrix wt = reordered_weight(plan, w0);
  CHECK(std::abs(wt.frobenius_norm() - w0.frobenius_norm()) <= 1e-12 * w0.frobenius_norm());
  const auto a = singular_values(w0);
  const auto b = singular_values(wt);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-10 * a.front());
  CHECK_THROWS_AS(reordered_weight(plan, random_matrix(6, 10, 1)), DimensionError);
}

TEST_CASE("dominant-direction rule satisfies the same plan invariants") {
  const Matrix w0 = random_matrix(8, 12, 8);
  const BlockPlan plan = build_plan(w0, 4, OrderingRule::DominantDirection);
  check_plan_invariants(plan, w0);
}

TEST_CASE("anchors are independent copies") {
  Matrix w0 = random_matrix(4, 4, 9);
  const BlockPlan plan = build_plan(w0, 2);
  const Matrix before = plan.anchor(0);
  w0 *= 3.0;
  CHECK(plan.anchor(0) == before);
}
