#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smoa/adapters.hpp"
#include "smoa/matrix.hpp"
#include "smoa/preprocess.hpp"

namespace smoa {

/// Frobenius fit of an adapter update to a target T in original coordinates.
///
/// The objective is L = 0.5 * ||update - T||_F^2. Reported losses are the
/// residual energy ||update - T||_F^2 = 2L, which is directly comparable to the
/// Eckart-Young tail sum_{j>r} sigma_j(T)^2.
class FitProblem {
 public:
  explicit FitProblem(Matrix target, std::shared_ptr<const BlockPlan> plan = nullptr);

  const Matrix& target() const noexcept { return target_; }
  const std::shared_ptr<const BlockPlan>& plan() const noexcept { return plan_; }
  double target_energy() const noexcept { return target_energy_; }

  /// Diagonal block k of P_out T P_in^T. Requires a plan.
  const Matrix& reordered_block(std::size_t k) const;
  /// Target energy outside the plan's diagonal blocks (unreachable by SMoA).
  double off_block_energy() const noexcept { return off_block_energy_; }

 private:
  Matrix target_;
  std::shared_ptr<const BlockPlan> plan_;
  std::vector<Matrix> blocks_;
  double target_energy_ = 0.0;
  double off_block_energy_ = 0.0;
};

/// Factor-shaped gradient: one pair for LoRA, K pairs for SMoA.
using FactorGradient = std::vector<FactorPair>;

std::vector<FactorPair> factors_of(const Adapter& adapter);
Adapter with_factors(const Adapter& adapter, std::vector<FactorPair> factors);

/// ||update - T||_F^2.
double residual_energy(const FitProblem& problem, const Adapter& adapter);
FactorGradient gradient(const FitProblem& problem, const Adapter& adapter);
double gradient_norm(const FactorGradient& g);

/// max over trainable entries of |analytic - central FD| / max(|analytic|, |FD|, 1e-12).
/// Perturbed objectives are evaluated in extended precision.
double finite_difference_check(const FitProblem& problem, const Adapter& adapter, double step = 1e-6);

struct FitConfig {
  double step_size = 1e-2;
  std::size_t max_steps = 50000;
  double grad_tol = 1e-9;
  double loss_floor_tol = 1e-3;
  int max_halvings = 10;
  /// Multiplier applied to the step size after every accepted step (1 disables growth).
  double step_growth = 1.1;
};

struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double gradient_norm = 0.0;
};

struct FitTrace {
  std::vector<StepRecord> steps;
  Adapter adapter;
  bool converged = false;
  /// "grad_tol", "max_steps", or "stalled" (no decrease after max_halvings).
  std::string stop_reason = "max_steps";
  /// Eckart-Young tail of the target at the LoRA rank; absent for SMoA.
  std::optional<double> floor;
  double final_loss = 0.0;
  /// final_loss / ||T||_F^2 (0 for a zero target).
  double relative_loss = 0.0;
  /// True when final_loss >= floor * (1 - loss_floor_tol), or no floor applies.
  bool floor_respected = true;
  std::uint64_t seed = 0;
  FitConfig config;
};

/// Full-batch gradient descent with step halving on loss increase. The step
/// size carries over between iterations. Stops when the gradient norm drops
/// below grad_tol, after max_steps, or when no halving reduces the loss.
FitTrace fit(const FitProblem& problem, Adapter initial, const FitConfig& config = {}, std::uint64_t seed = 0);

/// Builds the initial adapter from `init` then runs fit. Spectral init is
/// available for LoRA only; SMoA requires the problem's plan.
FitTrace fit(const FitProblem& problem, AdapterKind kind, std::size_t r, const AdapterInit& init,
             const FitConfig& config = {});

}  // namespace smoa
