#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "smoa/matrix.hpp"
#include "smoa/spectrum.hpp"

namespace smoa {

/// How coordinates are ranked before being cut into K contiguous groups.
enum class OrderingRule {
  /// Sigma-weighted centroid of each coordinate's singular-vector energy.
  SpectralCentroid,
  /// Index of the singular direction carrying most of the coordinate's
  /// sigma-weighted energy.
  DominantDirection,
};

/// Frozen preprocessing output for one weight matrix.
///
/// Anchors are deep copies of the diagonal blocks of the reordered weight and
/// never change after construction.
class BlockPlan {
 public:
  BlockPlan(std::size_t k, Permutation p_out, Permutation p_in, std::vector<Matrix> anchors,
            std::string source_hash = {});

  std::size_t k() const noexcept { return k_; }
  std::size_t d_out() const noexcept { return p_out_.size(); }
  std::size_t d_in() const noexcept { return p_in_.size(); }
  std::size_t block_rows() const noexcept { return d_out() / k_; }
  std::size_t block_cols() const noexcept { return d_in() / k_; }

  const Permutation& p_out() const noexcept { return p_out_; }
  const Permutation& p_in() const noexcept { return p_in_; }
  const std::vector<Matrix>& anchors() const noexcept { return anchors_; }
  const Matrix& anchor(std::size_t block) const { return anchors_.at(block); }
  const std::string& source_hash() const noexcept { return source_hash_; }

  Interval row_interval(std::size_t block) const;
  Interval col_interval(std::size_t block) const;
  std::vector<Interval> row_intervals() const;
  std::vector<Interval> col_intervals() const;

  friend bool operator==(const BlockPlan&, const BlockPlan&) = default;

 private:
  std::size_t k_;
  Permutation p_out_;
  Permutation p_in_;
  std::vector<Matrix> anchors_;
  std::string source_hash_;
};

struct CoordinateScores {
  std::vector<double> output;  ///< one score per row of W0
  std::vector<double> input;   ///< one score per column of W0
};

/// s(i) = sum_j j sigma_j X[i,j]^2 / sum_j sigma_j X[i,j]^2 with 1-based j,
/// X = U for outputs and V for inputs. Zero-energy coordinates score m + 1.
CoordinateScores coordinate_scores(const SpectralDecomposition& decomp,
                                   OrderingRule rule = OrderingRule::SpectralCentroid);

/// Throws ConfigError unless k >= 1 divides both dimensions.
void check_block_count(std::size_t rows, std::size_t cols, std::size_t k);

/// Sort coordinates by ascending score (ties by index) and cut into k equal
/// groups. k = 1 keeps the identity ordering.
BlockPlan build_plan(const Matrix& w0, std::size_t k, OrderingRule rule = OrderingRule::SpectralCentroid);

/// W~0 = P_out W0 P_in^T.
Matrix reordered_weight(const BlockPlan& plan, const Matrix& w0);

/// Ascending-score ordering with index tie-break, as used by build_plan.
Permutation order_by_score(const std::vector<double>& scores);

}  // namespace smoa
