#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "smoa/adapters.hpp"
#include "smoa/matrix.hpp"
#include "smoa/preprocess.hpp"

namespace smoa {

struct BlockCeiling {
  std::size_t block_bound = 0;  ///< s_k = min(block rows, block cols)
  std::size_t anchor_rank = 0;  ///< numerical rank of M_k
  double anchor_epsilon = 0.0;  ///< tolerance used for anchor_rank
  std::size_t block_ceiling = 0;
};

/// Analytic rank ceiling of an SMoA update at budget r:
/// total = sum_k min(s_k, rho * rank(M_k)), compared against LoRA's r.
struct RankCeilingReport {
  std::vector<BlockCeiling> per_block;
  std::size_t total_ceiling = 0;
  std::size_t lora_ceiling = 0;
  bool separated = false;
};

RankCeilingReport rank_ceiling(const BlockPlan& plan, std::size_t r);

/// K * min(s, rho * s) with s = min(d_out, d_in) / K, i.e. the ceiling when
/// every anchor has full local rank.
std::size_t full_rank_ceiling(std::size_t d_out, std::size_t d_in, std::size_t k, std::size_t r);

/// Numerical rank of a measured update; epsilon < 0 selects the default
/// tolerance.
std::size_t achieved_rank(const Matrix& update, double epsilon = -1.0);

/// Block-aligned target blkdiag(C_k o M_k) with rank(C_k) <= rho, mapped back
/// to original coordinates.
struct WitnessInstance {
  std::shared_ptr<const BlockPlan> plan;
  std::size_t rho = 0;
  std::uint64_t seed = 0;
  std::vector<Matrix> coefficients;
  Matrix target;
  std::size_t reordered_target_rank = 0;

  Matrix reordered_target() const;
};

WitnessInstance make_witness(std::shared_ptr<const BlockPlan> plan, std::size_t rho, std::uint64_t seed);

/// Factor each C_k at rank rho (truncated SVD) and wrap as an adapter. A
/// rho = 0 witness yields a rho = 1 adapter with zero factors.
SmoaAdapter smoa_exact_fit(const WitnessInstance& witness);

/// Best rank-r Frobenius error of the witness target, sum_{j>r} sigma_j^2.
/// Returns exactly 0 once r reaches the target's numerical rank.
double lora_gap(const WitnessInstance& witness, std::size_t r);

}  // namespace smoa
