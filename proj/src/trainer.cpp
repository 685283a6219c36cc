#include "smoa/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smoa/errors.hpp"
#include "smoa/spectrum.hpp"

namespace smoa {

FitProblem::FitProblem(Matrix target, std::shared_ptr<const BlockPlan> plan)
    : target_(std::move(target)), plan_(std::move(plan)) {
  target_energy_ = target_.squared_norm();
  if (!plan_) return;
  if (plan_->d_out() != target_.rows() || plan_->d_in() != target_.cols()) {
    throw DimensionError("fit problem: target " + shape_string(target_.rows(), target_.cols()) +
                         " does not match plan " + shape_string(plan_->d_out(), plan_->d_in()));
  }
  const Matrix reordered = apply_permutations(target_, plan_->p_out(), plan_->p_in());
  const std::size_t br = plan_->block_rows();
  const std::size_t bc = plan_->block_cols();
  off_block_energy_ = 0.0;
  for (std::size_t i = 0; i < reordered.rows(); ++i) {
    for (std::size_t j = 0; j < reordered.cols(); ++j) {
      if (i / br != j / bc) off_block_energy_ += reordered(i, j) * reordered(i, j);
    }
  }
  for (std::size_t k = 0; k < plan_->k(); ++k) {
    blocks_.push_back(block_extract(reordered, plan_->row_interval(k), plan_->col_interval(k)));
  }
}

const Matrix& FitProblem::reordered_block(std::size_t k) const {
  if (!plan_) throw ConfigError("fit problem has no plan");
  return blocks_.at(k);
}

std::vector<FactorPair> factors_of(const Adapter& adapter) {
  if (const auto* l = std::get_if<LoraAdapter>(&adapter)) return {FactorPair{l->a, l->b}};
  return std::get<SmoaAdapter>(adapter).factors();
}

Adapter with_factors(const Adapter& adapter, std::vector<FactorPair> factors) {
  if (std::holds_alternative<LoraAdapter>(adapter)) {
    if (factors.size() != 1) throw ConfigError("lora adapter takes exactly one factor pair");
    return LoraAdapter(std::move(factors.front().a), std::move(factors.front().b));
  }
  return std::get<SmoaAdapter>(adapter).with_factors(std::move(factors));
}

namespace {

void check_problem(const FitProblem& problem, const Adapter& adapter) {
  if (const auto* s = std::get_if<SmoaAdapter>(&adapter)) {
    if (!problem.plan()) throw ConfigError("smoa fit requires a block plan");
    if (!(s->plan() == *problem.plan())) throw ConfigError("adapter plan differs from the fit problem's plan");
  } else {
    const auto& l = std::get<LoraAdapter>(adapter);
    if (l.d_out() != problem.target().rows() || l.d_in() != problem.target().cols()) {
      throw DimensionError("lora adapter " + shape_string(l.d_out(), l.d_in()) + " vs target " +
                           shape_string(problem.target().rows(), problem.target().cols()));
    }
  }
}

// Residual in the coordinates where the adapter's factors live: the full
// matrix for LoRA, the K reordered diagonal blocks for SMoA.
std::vector<Matrix> residual_blocks(const FitProblem& problem, const Adapter& adapter) {
  if (const auto* l = std::get_if<LoraAdapter>(&adapter)) {
    return {lora_update(*l) - problem.target()};
  }
  const auto& s = std::get<SmoaAdapter>(adapter);
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < s.k(); ++k) {
    const auto& f = s.factors()[k];
    out.push_back(hadamard(f.b * f.a, s.plan().anchor(k)) - problem.reordered_block(k));
  }
  return out;
}

double energy_of(const FitProblem& problem, const Adapter& adapter, const std::vector<Matrix>& residuals) {
  double e = 0.0;
  for (const auto& r : residuals) e += r.squared_norm();
  if (std::holds_alternative<SmoaAdapter>(adapter)) e += problem.off_block_energy();
  return e;
}

// Extended-precision objective 0.5 ||update - T||^2 with one factor entry
// shifted by `delta`. Entries are enumerated pair by pair, A before B, row-major.
long double shifted_objective(const FitProblem& problem, const Adapter& adapter,
                              const std::vector<FactorPair>& factors, std::size_t entry, long double delta) {
  const bool smoa = std::holds_alternative<SmoaAdapter>(adapter);
  long double total = 0.0L;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const Matrix& a = factors[k].a;
    const Matrix& b = factors[k].b;
    const std::size_t rho = a.rows();
    std::vector<long double> av(a.data().begin(), a.data().end());
    std::vector<long double> bv(b.data().begin(), b.data().end());
    if (entry >= offset && entry < offset + a.size()) av[entry - offset] += delta;
    offset += a.size();
    if (entry >= offset && entry < offset + b.size()) bv[entry - offset] += delta;
    offset += b.size();
    const Matrix& target = smoa ? problem.reordered_block(k) : problem.target();
    const Matrix* anchor = smoa ? &std::get<SmoaAdapter>(adapter).plan().anchor(k) : nullptr;
    for (std::size_t i = 0; i < b.rows(); ++i) {
      for (std::size_t j = 0; j < a.cols(); ++j) {
        long double v = 0.0L;
        for (std::size_t p = 0; p < rho; ++p) v += bv[i * rho + p] * av[p * a.cols() + j];
        if (anchor) v *= static_cast<long double>((*anchor)(i, j));
        const long double r = v - static_cast<long double>(target(i, j));
        total += r * r;
      }
    }
  }
  if (smoa) total += static_cast<long double>(problem.off_block_energy());
  return 0.5L * total;
}

std::vector<FactorPair> step_factors(const std::vector<FactorPair>& f, const FactorGradient& g, double lr) {
  std::vector<FactorPair> out = f;
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto a = out[k].a.data();
    auto ga = g[k].a.data();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= lr * ga[i];
    auto b = out[k].b.data();
    auto gb = g[k].b.data();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
  }
  return out;
}

bool all_finite(const std::vector<FactorPair>& f) {
  for (const auto& p : f) {
    for (double v : p.a.data())
      if (!std::isfinite(v)) return false;
    for (double v : p.b.data())
      if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

double residual_energy(const FitProblem& problem, const Adapter& adapter) {
  check_problem(problem, adapter);
  return energy_of(problem, adapter, residual_blocks(problem, adapter));
}

FactorGradient gradient(const FitProblem& problem, const Adapter& adapter) {
  check_problem(problem, adapter);
  const auto residuals = residual_blocks(problem, adapter);
  FactorGradient g;
  if (const auto* l = std::get_if<LoraAdapter>(&adapter)) {
    const Matrix& r = residuals.front();
    // dL/dA = B^T R, dL/dB = R A^T
    g.push_back({l->b.transpose() * r, r * l->a.transpose()});
    return g;
  }
  const auto& s = std::get<SmoaAdapter>(adapter);
  for (std::size_t k = 0; k < s.k(); ++k) {
    const auto& f = s.factors()[k];
    const Matrix masked = hadamard(residuals[k], s.plan().anchor(k));
    g.push_back({f.b.transpose() * masked, masked * f.a.transpose()});
  }
  return g;
}

double gradient_norm(const FactorGradient& g) {
  double s = 0.0;
  for (const auto& p : g) s += p.a.squared_norm() + p.b.squared_norm();
  return std::sqrt(s);
}

double finite_difference_check(const FitProblem& problem, const Adapter& adapter, double step) {
  if (!(step > 0.0) || step > 1e-3) throw RangeError("finite_difference_check: step must lie in (0, 1e-3]");
  const auto analytic = gradient(problem, adapter);
  const auto factors = factors_of(adapter);
  double worst = 0.0;
  std::size_t entry = 0;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    for (const Matrix* g : {&analytic[k].a, &analytic[k].b}) {
      for (double an : g->data()) {
        const long double h = step;
        const long double plus = shifted_objective(problem, adapter, factors, entry, h);
        const long double minus = shifted_objective(problem, adapter, factors, entry, -h);
        const double fd = static_cast<double>((plus - minus) / (2.0L * h));
        const double denom = std::max({std::abs(an), std::abs(fd), 1e-12});
        worst = std::max(worst, std::abs(an - fd) / denom);
        ++entry;
      }
    }
  }
  return worst;
}

FitTrace fit(const FitProblem& problem, Adapter initial, const FitConfig& config, std::uint64_t seed) {
  if (!(config.step_size > 0.0)) throw ConfigError("fit: step_size must be positive");
  if (config.max_steps < 1) throw ConfigError("fit: max_steps must be at least 1");
  if (!(config.step_growth >= 1.0)) throw ConfigError("fit: step_growth must be at least 1");
  check_problem(problem, initial);

  FitTrace trace{{}, initial, false, "max_steps", std::nullopt, 0.0, 0.0, true, seed, config};
  if (const auto* l = std::get_if<LoraAdapter>(&initial)) {
    const std::size_t m = std::min(problem.target().rows(), problem.target().cols());
    trace.floor = l->rank() >= m ? 0.0 : tail_energy(problem.target(), l->rank());
  }

  Adapter current = std::move(initial);
  double loss = residual_energy(problem, current);
  if (!std::isfinite(loss)) throw NumericalError("fit: non-finite loss at step 0");
  FactorGradient g = gradient(problem, current);
  double gn = gradient_norm(g);
  trace.steps.push_back({0, loss, gn});

  double lr = config.step_size;
  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    if (gn < config.grad_tol) {
      trace.converged = true;
      trace.stop_reason = "grad_tol";
      break;
    }
    const auto base = factors_of(current);
    std::vector<FactorPair> cand;
    double cand_loss = 0.0;
    bool accepted = false;
    for (int halving = 0; halving <= config.max_halvings; ++halving) {
      cand = step_factors(base, g, lr);
      cand_loss = all_finite(cand) ? residual_energy(problem, with_factors(current, cand))
                                   : std::numeric_limits<double>::infinity();
      if (std::isfinite(cand_loss) && cand_loss <= loss) {
        accepted = true;
        break;
      }
      if (halving < config.max_halvings) lr *= 0.5;
    }
    if (!accepted) {
      if (!std::isfinite(cand_loss)) {
        throw NumericalError("fit: non-finite loss at step " + std::to_string(step));
      }
      trace.stop_reason = "stalled";
      break;
    }
    current = with_factors(current, std::move(cand));
    lr *= config.step_growth;
    loss = cand_loss;
    g = gradient(problem, current);
    gn = gradient_norm(g);
    trace.steps.push_back({step, loss, gn});
  }
  if (!trace.converged && gn < config.grad_tol) {
    trace.converged = true;
    trace.stop_reason = "grad_tol";
  }

  trace.adapter = std::move(current);
  trace.final_loss = loss;
  trace.relative_loss = problem.target_energy() > 0.0 ? loss / problem.target_energy() : 0.0;
  if (trace.floor) trace.floor_respected = loss >= *trace.floor * (1.0 - config.loss_floor_tol);
  return trace;
}

FitTrace fit(const FitProblem& problem, AdapterKind kind, std::size_t r, const AdapterInit& init,
             const FitConfig& config) {
  const Matrix& t = problem.target();
  if (kind == AdapterKind::Lora) {
    if (init.scheme == InitScheme::Spectral) {
      return fit(problem, make_lora_spectral(t, r, init.scale.value_or(1.0)), config, init.seed);
    }
    return fit(problem, make_lora(t.rows(), t.cols(), r, init), config, init.seed);
  }
  if (!problem.plan()) throw ConfigError("smoa fit requires a block plan");
  if (init.scheme == InitScheme::Spectral) {
    return fit(problem, make_smoa_spectral(problem.plan(), t, r, init.scale.value_or(1.0)), config, init.seed);
  }
  return fit(problem, make_smoa(problem.plan(), r, init), config, init.seed);
}

}  // namespace smoa
