#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "smoa/matrix.hpp"
#include "smoa/preprocess.hpp"

namespace smoa {

enum class InitScheme {
  ZeroUpdate,  ///< B = 0, A ~ N(0, scale^2): the initial update is exactly zero
  Gaussian,    ///< both factors ~ N(0, scale^2)
  Spectral,    ///< factors from the target's leading singular triplets, times scale
};

struct AdapterInit {
  InitScheme scheme = InitScheme::ZeroUpdate;
  std::uint64_t seed = 0;
  /// Gaussian standard deviation; nullopt means 1/sqrt(fan-in of A).
  /// For the spectral scheme this multiplies both factors (1 = exact optimum).
  std::optional<double> scale;
};

std::string to_string(InitScheme scheme);
InitScheme parse_init_scheme(const std::string& name);

/// Rank-r update B A with B: d_out x r, A: r x d_in.
struct LoraAdapter {
  Matrix a;
  Matrix b;

  LoraAdapter(Matrix a, Matrix b);
  std::size_t rank() const noexcept { return a.rows(); }
  std::size_t d_in() const noexcept { return a.cols(); }
  std::size_t d_out() const noexcept { return b.rows(); }
};

struct FactorPair {
  Matrix a;  ///< rho x d_in/K
  Matrix b;  ///< d_out/K x rho
};

/// K Hadamard-modulated local branches over a frozen plan.
class SmoaAdapter {
 public:
  SmoaAdapter(std::shared_ptr<const BlockPlan> plan, std::size_t rho, std::vector<FactorPair> factors);

  const BlockPlan& plan() const noexcept { return *plan_; }
  std::shared_ptr<const BlockPlan> plan_ptr() const noexcept { return plan_; }
  std::size_t rho() const noexcept { return rho_; }
  std::size_t k() const noexcept { return plan_->k(); }
  /// Reference LoRA budget r = rho * K.
  std::size_t rank_budget() const noexcept { return rho_ * plan_->k(); }
  const std::vector<FactorPair>& factors() const noexcept { return factors_; }

  /// Same plan, new factors (shapes re-validated).
  SmoaAdapter with_factors(std::vector<FactorPair> factors) const;

 private:
  std::shared_ptr<const BlockPlan> plan_;
  std::size_t rho_;
  std::vector<FactorPair> factors_;
};

using Adapter = std::variant<LoraAdapter, SmoaAdapter>;

LoraAdapter make_lora(std::size_t d_out, std::size_t d_in, std::size_t r, const AdapterInit& init);
/// r is the reference LoRA budget; K must divide it.
SmoaAdapter make_smoa(std::shared_ptr<const BlockPlan> plan, std::size_t r, const AdapterInit& init);

/// Spectral initialization from a target update (original coordinates).
LoraAdapter make_lora_spectral(const Matrix& target, std::size_t r, double scale = 1.0);
/// Per block: rank-rho spectral factors of the reordered target block divided
/// entrywise by its anchor (entries where the anchor vanishes are zeroed).
SmoaAdapter make_smoa_spectral(std::shared_ptr<const BlockPlan> plan, const Matrix& target, std::size_t r,
                               double scale = 1.0);

Matrix lora_update(const LoraAdapter& adapter);
/// Update in reordered coordinates: blkdiag((B_k A_k) o M_k).
Matrix smoa_reordered_update(const SmoaAdapter& adapter);
/// Update in original coordinates: P_out^T blkdiag(...) P_in.
Matrix smoa_update(const SmoaAdapter& adapter);
Matrix update(const Adapter& adapter);

/// (W0 + update) x.
Matrix apply_forward(const Matrix& w0, const Matrix& update, const Matrix& x);
/// W0 + update, checked against the adapter's shape.
Matrix merge(const Matrix& w0, const Adapter& adapter);

enum class AdapterKind { Lora, Smoa };

std::string to_string(AdapterKind kind);
AdapterKind parse_adapter_kind(const std::string& name);

/// Trainable parameter count: r (d_in + d_out) for LoRA, (r / K)(d_in + d_out)
/// for SMoA. K is ignored for LoRA.
std::uint64_t param_count(AdapterKind kind, std::uint64_t d_in, std::uint64_t d_out, std::uint64_t r,
                          std::uint64_t k = 1);
std::uint64_t param_count(const Adapter& adapter);

}  // namespace smoa
