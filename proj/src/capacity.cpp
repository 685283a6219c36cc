#include "smoa/capacity.hpp"

#include <algorithm>
#include <cmath>

#include "smoa/errors.hpp"
#include "smoa/random.hpp"
#include "smoa/spectrum.hpp"

namespace smoa {

RankCeilingReport rank_ceiling(const BlockPlan& plan, std::size_t r) {
  if (r == 0 || r % plan.k() != 0) {
    throw ConfigError("rank_ceiling: k=" + std::to_string(plan.k()) + " must divide r=" + std::to_string(r));
  }
  const std::size_t rho = r / plan.k();
  RankCeilingReport report;
  report.lora_ceiling = r;
  for (const auto& anchor : plan.anchors()) {
    BlockCeiling blk;
    blk.block_bound = std::min(anchor.rows(), anchor.cols());
    const auto sv = singular_values(anchor);
    blk.anchor_epsilon = default_rank_tolerance(anchor.rows(), anchor.cols(), sv.front());
    blk.anchor_rank = count_above(sv, blk.anchor_epsilon);
    blk.block_ceiling = std::min(blk.block_bound, rho * blk.anchor_rank);
    report.total_ceiling += blk.block_ceiling;
    report.per_block.push_back(blk);
  }
  report.separated = report.total_ceiling > r;
  return report;
}

std::size_t full_rank_ceiling(std::size_t d_out, std::size_t d_in, std::size_t k, std::size_t r) {
  if (k == 0 || d_out % k != 0 || d_in % k != 0 || r == 0 || r % k != 0) {
    throw ConfigError("full_rank_ceiling: k=" + std::to_string(k) + " must divide d_out=" + std::to_string(d_out) +
                      ", d_in=" + std::to_string(d_in) + " and r=" + std::to_string(r));
  }
  const std::size_t s = std::min(d_out / k, d_in / k);
  const std::size_t rho = r / k;
  return k * std::min(s, rho * s);
}

std::size_t achieved_rank(const Matrix& update, double epsilon) {
  if (epsilon < 0.0) return numerical_rank(update);
  return numerical_rank(update, epsilon);
}

Matrix WitnessInstance::reordered_target() const {
  return apply_permutations(target, plan->p_out(), plan->p_in());
}

WitnessInstance make_witness(std::shared_ptr<const BlockPlan> plan, std::size_t rho, std::uint64_t seed) {
  if (!plan) throw ConfigError("make_witness requires a plan");
  const std::size_t br = plan->block_rows();
  const std::size_t bc = plan->block_cols();
  if (rho > std::min(br, bc)) {
    throw RangeError("make_witness: rho=" + std::to_string(rho) + " exceeds block dimension " +
                     std::to_string(std::min(br, bc)));
  }
  Rng rng(seed);
  std::vector<Matrix> coefficients;
  std::vector<Matrix> blocks;
  for (std::size_t k = 0; k < plan->k(); ++k) {
    Matrix c(br, bc);
    if (rho > 0) {
      const Matrix b = gaussian_matrix(br, rho, rng);
      const Matrix a = gaussian_matrix(rho, bc, rng);
      c = b * a;
    }
    blocks.push_back(hadamard(c, plan->anchor(k)));
    coefficients.push_back(std::move(c));
  }
  const Matrix reordered = block_diagonal(blocks);
  WitnessInstance w{plan, rho, seed, std::move(coefficients),
                    invert_permutations(reordered, plan->p_out(), plan->p_in()), 0};
  w.reordered_target_rank = numerical_rank(reordered);
  return w;
}

SmoaAdapter smoa_exact_fit(const WitnessInstance& witness) {
  const auto& plan = *witness.plan;
  const std::size_t rho = std::max<std::size_t>(witness.rho, 1);
  std::vector<FactorPair> factors;
  for (const auto& c : witness.coefficients) {
    Matrix a(rho, c.cols());
    Matrix b(c.rows(), rho);
    if (witness.rho > 0) {
      const auto d = svd(c);
      for (std::size_t k = 0; k < witness.rho; ++k) {
        const double root = std::sqrt(d.singular_values[k]);
        for (std::size_t j = 0; j < c.cols(); ++j) a(k, j) = root * d.right(j, k);
        for (std::size_t i = 0; i < c.rows(); ++i) b(i, k) = root * d.left(i, k);
      }
    }
    factors.push_back({std::move(a), std::move(b)});
  }
  if (factors.size() != plan.k()) throw ConfigError("witness coefficients do not match its plan");
  return SmoaAdapter(witness.plan, rho, std::move(factors));
}

double lora_gap(const WitnessInstance& witness, std::size_t r) {
  const Matrix reordered = witness.reordered_target();
  const std::size_t m = std::min(reordered.rows(), reordered.cols());
  // Singular values below the rank tolerance are rounding noise, not signal.
  if (r >= m || r >= witness.reordered_target_rank) return 0.0;
  return tail_energy(reordered, r);
}

}  // namespace smoa
