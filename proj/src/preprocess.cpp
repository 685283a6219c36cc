#include "smoa/preprocess.hpp"

#include <algorithm>
#include <numeric>

#include "smoa/errors.hpp"
#include "smoa/matrix_io.hpp"

namespace smoa {

void check_block_count(std::size_t rows, std::size_t cols, std::size_t k) {
  if (k == 0 || rows % k != 0 || cols % k != 0 || k > std::min(rows, cols)) {
    throw ConfigError("block count k=" + std::to_string(k) + " must divide both dimensions of " +
                      "(rows=" + std::to_string(rows) + ", cols=" + std::to_string(cols) + ")");
  }
}

BlockPlan::BlockPlan(std::size_t k, Permutation p_out, Permutation p_in, std::vector<Matrix> anchors,
                     std::string source_hash)
    : k_(k), p_out_(std::move(p_out)), p_in_(std::move(p_in)), anchors_(std::move(anchors)),
      source_hash_(std::move(source_hash)) {
  check_block_count(p_out_.size(), p_in_.size(), k_);
  if (anchors_.size() != k_) {
    throw ConfigError("plan expects " + std::to_string(k_) + " anchors, got " + std::to_string(anchors_.size()));
  }
  for (const auto& a : anchors_) {
    if (a.rows() != block_rows() || a.cols() != block_cols()) {
      throw DimensionError("anchor shape " + shape_string(a.rows(), a.cols()) + " does not match block " +
                           shape_string(block_rows(), block_cols()));
    }
  }
}

Interval BlockPlan::row_interval(std::size_t block) const {
  if (block >= k_) throw RangeError("block index out of range");
  return {block * block_rows(), (block + 1) * block_rows()};
}

Interval BlockPlan::col_interval(std::size_t block) const {
  if (block >= k_) throw RangeError("block index out of range");
  return {block * block_cols(), (block + 1) * block_cols()};
}

std::vector<Interval> BlockPlan::row_intervals() const {
  std::vector<Interval> out;
  for (std::size_t b = 0; b < k_; ++b) out.push_back(row_interval(b));
  return out;
}

std::vector<Interval> BlockPlan::col_intervals() const {
  std::vector<Interval> out;
  for (std::size_t b = 0; b < k_; ++b) out.push_back(col_interval(b));
  return out;
}

namespace {

std::vector<double> score_rows(const Matrix& vectors, const std::vector<double>& sigma, OrderingRule rule) {
  const std::size_t m = sigma.size();
  std::vector<double> scores(vectors.rows());
  for (std::size_t i = 0; i < vectors.rows(); ++i) {
    double mass = 0.0;
    double moment = 0.0;
    double best = 0.0;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double e = sigma[j] * vectors(i, j) * vectors(i, j);
      mass += e;
      moment += static_cast<double>(j + 1) * e;
      if (e > best) {
        best = e;
        best_j = j + 1;
      }
    }
    // Rows of an all-zero coordinate pick up only rounding-level energy.
    const double floor = sigma.empty() ? 0.0 : sigma.front() * 1e-24;
    if (mass <= floor) {
      scores[i] = static_cast<double>(m + 1);
    } else if (rule == OrderingRule::SpectralCentroid) {
      scores[i] = moment / mass;
    } else {
      scores[i] = static_cast<double>(best_j);
    }
  }
  return scores;
}

}  // namespace

CoordinateScores coordinate_scores(const SpectralDecomposition& decomp, OrderingRule rule) {
  return {score_rows(decomp.left, decomp.singular_values, rule),
          score_rows(decomp.right, decomp.singular_values, rule)};
}

Permutation order_by_score(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return Permutation(std::move(idx));
}

BlockPlan build_plan(const Matrix& w0, std::size_t k, OrderingRule rule) {
  check_block_count(w0.rows(), w0.cols(), k);
  Permutation p_out = Permutation::identity(w0.rows());
  Permutation p_in = Permutation::identity(w0.cols());
  if (k > 1) {
    const auto scores = coordinate_scores(svd(w0), rule);
    p_out = order_by_score(scores.output);
    p_in = order_by_score(scores.input);
  }
  const Matrix reordered = apply_permutations(w0, p_out, p_in);
  const std::size_t br = w0.rows() / k;
  const std::size_t bc = w0.cols() / k;
  std::vector<Matrix> anchors;
  anchors.reserve(k);
  for (std::size_t b = 0; b < k; ++b) {
    anchors.push_back(block_extract(reordered, {b * br, (b + 1) * br}, {b * bc, (b + 1) * bc}));
  }
  return BlockPlan(k, std::move(p_out), std::move(p_in), std::move(anchors), io::matrix_hash(w0));
}

Matrix reordered_weight(const BlockPlan& plan, const Matrix& w0) {
  if (w0.rows() != plan.d_out() || w0.cols() != plan.d_in()) {
    throw DimensionError("reordered_weight: weight " + shape_string(w0.rows(), w0.cols()) +
                         " does not match plan " + shape_string(plan.d_out(), plan.d_in()));
  }
  return apply_permutations(w0, plan.p_out(), plan.p_in());
}

}  // namespace smoa
