#include "smoa/adapters.hpp"

#include <algorithm>
#include <cmath>

#include "smoa/errors.hpp"
#include "smoa/random.hpp"
#include "smoa/spectrum.hpp"

namespace smoa {

std::string to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::ZeroUpdate: return "zero-update";
    case InitScheme::Gaussian: return "gaussian";
    case InitScheme::Spectral: return "spectral";
  }
  return "unknown";
}

InitScheme parse_init_scheme(const std::string& name) {
  if (name == "zero-update" || name == "zero") return InitScheme::ZeroUpdate;
  if (name == "gaussian") return InitScheme::Gaussian;
  if (name == "spectral") return InitScheme::Spectral;
  throw ArgumentError("unknown init scheme '" + name + "'");
}

std::string to_string(AdapterKind kind) { return kind == AdapterKind::Lora ? "lora" : "smoa"; }

AdapterKind parse_adapter_kind(const std::string& name) {
  if (name == "lora") return AdapterKind::Lora;
  if (name == "smoa") return AdapterKind::Smoa;
  throw ArgumentError("unknown adapter kind '" + name + "'");
}

LoraAdapter::LoraAdapter(Matrix a_, Matrix b_) : a(std::move(a_)), b(std::move(b_)) {
  if (b.cols() != a.rows()) {
    throw DimensionError("lora: B is " + shape_string(b.rows(), b.cols()) + " but A is " +
                         shape_string(a.rows(), a.cols()));
  }
}

SmoaAdapter::SmoaAdapter(std::shared_ptr<const BlockPlan> plan, std::size_t rho, std::vector<FactorPair> factors)
    : plan_(std::move(plan)), rho_(rho), factors_(std::move(factors)) {
  if (!plan_) throw ConfigError("smoa adapter requires a plan");
  if (rho_ == 0) throw ConfigError("smoa local rank must be positive");
  if (factors_.size() != plan_->k()) {
    throw ConfigError("smoa adapter expects " + std::to_string(plan_->k()) + " factor pairs, got " +
                      std::to_string(factors_.size()));
  }
  for (const auto& f : factors_) {
    if (f.a.rows() != rho_ || f.a.cols() != plan_->block_cols() || f.b.rows() != plan_->block_rows() ||
        f.b.cols() != rho_) {
      throw DimensionError("smoa factor shapes A " + shape_string(f.a.rows(), f.a.cols()) + ", B " +
                           shape_string(f.b.rows(), f.b.cols()) + " do not match block " +
                           shape_string(plan_->block_rows(), plan_->block_cols()) + " at rho=" +
                           std::to_string(rho_));
    }
  }
}

SmoaAdapter SmoaAdapter::with_factors(std::vector<FactorPair> factors) const {
  return SmoaAdapter(plan_, rho_, std::move(factors));
}

namespace {

struct FactorDraw {
  Matrix a;
  Matrix b;
};

FactorDraw draw_factors(std::size_t rows, std::size_t cols, std::size_t r, const AdapterInit& init, Rng& rng) {
  const double scale = init.scale.value_or(1.0 / std::sqrt(static_cast<double>(cols)));
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("init scale must be positive");
  Matrix a = gaussian_matrix(r, cols, rng, scale);
  Matrix b = init.scheme == InitScheme::Gaussian ? gaussian_matrix(rows, r, rng, scale) : Matrix(rows, r);
  return {std::move(a), std::move(b)};
}

// C ~= B A with B = U sqrt(S), A = sqrt(S) V^T over the leading r triplets.
FactorDraw spectral_factors(const Matrix& c, std::size_t r, double scale) {
  const auto d = svd(c);
  Matrix a(r, c.cols());
  Matrix b(c.rows(), r);
  const std::size_t kept = std::min(r, d.singular_values.size());
  for (std::size_t k = 0; k < kept; ++k) {
    const double root = std::sqrt(d.singular_values[k]) * scale;
    for (std::size_t j = 0; j < c.cols(); ++j) a(k, j) = root * d.right(j, k);
    for (std::size_t i = 0; i < c.rows(); ++i) b(i, k) = root * d.left(i, k);
  }
  return {std::move(a), std::move(b)};
}

}  // namespace

LoraAdapter make_lora(std::size_t d_out, std::size_t d_in, std::size_t r, const AdapterInit& init) {
  if (r == 0) throw ConfigError("lora rank must be positive");
  if (init.scheme == InitScheme::Spectral) {
    throw ConfigError("spectral init needs a target; use make_lora_spectral");
  }
  Rng rng(init.seed);
  auto f = draw_factors(d_out, d_in, r, init, rng);
  return LoraAdapter(std::move(f.a), std::move(f.b));
}

SmoaAdapter make_smoa(std::shared_ptr<const BlockPlan> plan, std::size_t r, const AdapterInit& init) {
  if (!plan) throw ConfigError("smoa adapter requires a plan");
  if (r == 0 || r % plan->k() != 0) {
    throw ConfigError("rank budget r=" + std::to_string(r) + " must be a positive multiple of k=" +
                      std::to_string(plan->k()));
  }
  if (init.scheme == InitScheme::Spectral) {
    throw ConfigError("spectral init needs a target; use make_smoa_spectral");
  }
  const std::size_t rho = r / plan->k();
  Rng rng(init.seed);
  std::vector<FactorPair> factors;
  for (std::size_t blk = 0; blk < plan->k(); ++blk) {
    auto f = draw_factors(plan->block_rows(), plan->block_cols(), rho, init, rng);
    factors.push_back({std::move(f.a), std::move(f.b)});
  }
  return SmoaAdapter(std::move(plan), rho, std::move(factors));
}

LoraAdapter make_lora_spectral(const Matrix& target, std::size_t r, double scale) {
  if (r == 0) throw ConfigError("lora rank must be positive");
  auto f = spectral_factors(target, r, scale);
  return LoraAdapter(std::move(f.a), std::move(f.b));
}

SmoaAdapter make_smoa_spectral(std::shared_ptr<const BlockPlan> plan, const Matrix& target, std::size_t r,
                               double scale) {
  if (!plan) throw ConfigError("smoa adapter requires a plan");
  if (r == 0 || r % plan->k() != 0) {
    throw ConfigError("rank budget r=" + std::to_string(r) + " must be a positive multiple of k=" +
                      std::to_string(plan->k()));
  }
  if (target.rows() != plan->d_out() || target.cols() != plan->d_in()) {
    throw DimensionError("spectral init target " + shape_string(target.rows(), target.cols()) + " vs plan " +
                         shape_string(plan->d_out(), plan->d_in()));
  }
  const std::size_t rho = r / plan->k();
  const Matrix reordered = apply_permutations(target, plan->p_out(), plan->p_in());
  std::vector<FactorPair> factors;
  for (std::size_t blk = 0; blk < plan->k(); ++blk) {
    const Matrix& m = plan->anchor(blk);
    Matrix c = block_extract(reordered, plan->row_interval(blk), plan->col_interval(blk));
    double peak = 0.0;
    for (double v : m.data()) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < c.rows(); ++i) {
      for (std::size_t j = 0; j < c.cols(); ++j) {
        c(i, j) = std::abs(m(i, j)) > 1e-8 * peak ? c(i, j) / m(i, j) : 0.0;
      }
    }
    auto f = spectral_factors(c, rho, scale);
    factors.push_back({std::move(f.a), std::move(f.b)});
  }
  return SmoaAdapter(std::move(plan), rho, std::move(factors));
}

Matrix lora_update(const LoraAdapter& adapter) { return adapter.b * adapter.a; }

Matrix smoa_reordered_update(const SmoaAdapter& adapter) {
  const auto& plan = adapter.plan();
  Matrix out(plan.d_out(), plan.d_in());
  for (std::size_t blk = 0; blk < plan.k(); ++blk) {
    const auto& f = adapter.factors()[blk];
    const Matrix local = hadamard(f.b * f.a, plan.anchor(blk));
    const Interval rows = plan.row_interval(blk);
    const Interval cols = plan.col_interval(blk);
    for (std::size_t i = 0; i < local.rows(); ++i)
      for (std::size_t j = 0; j < local.cols(); ++j) out(rows.begin + i, cols.begin + j) = local(i, j);
  }
  return out;
}

Matrix smoa_update(const SmoaAdapter& adapter) {
  return invert_permutations(smoa_reordered_update(adapter), adapter.plan().p_out(), adapter.plan().p_in());
}

Matrix update(const Adapter& adapter) {
  return std::visit(
      [](const auto& a) -> Matrix {
        if constexpr (std::is_same_v<std::decay_t<decltype(a)>, LoraAdapter>) {
          return lora_update(a);
        } else {
          return smoa_update(a);
        }
      },
      adapter);
}

Matrix apply_forward(const Matrix& w0, const Matrix& update, const Matrix& x) {
  if (!w0.same_shape(update)) {
    throw DimensionError("apply_forward: weight " + shape_string(w0.rows(), w0.cols()) + " vs update " +
                         shape_string(update.rows(), update.cols()));
  }
  if (x.rows() != w0.cols()) {
    throw DimensionError("apply_forward: input has " + std::to_string(x.rows()) + " rows, weight expects " +
                         std::to_string(w0.cols()));
  }
  return (w0 + update) * x;
}

Matrix merge(const Matrix& w0, const Adapter& adapter) {
  Matrix delta = update(adapter);
  if (!w0.same_shape(delta)) {
    throw DimensionError("merge: weight " + shape_string(w0.rows(), w0.cols()) + " vs adapter update " +
                         shape_string(delta.rows(), delta.cols()));
  }
  return w0 + delta;
}

std::uint64_t param_count(AdapterKind kind, std::uint64_t d_in, std::uint64_t d_out, std::uint64_t r,
                          std::uint64_t k) {
  if (kind == AdapterKind::Lora) return r * (d_in + d_out);
  if (k == 0 || r % k != 0 || d_in % k != 0 || d_out % k != 0) {
    throw ConfigError("param_count: k=" + std::to_string(k) + " must divide r=" + std::to_string(r) +
                      ", d_in=" + std::to_string(d_in) + " and d_out=" + std::to_string(d_out));
  }
  // Sum over blocks of rho (d_in/K + d_out/K).
  const std::uint64_t rho = r / k;
  return k * (rho * (d_in / k) + rho * (d_out / k));
}

std::uint64_t param_count(const Adapter& adapter) {
  if (const auto* l = std::get_if<LoraAdapter>(&adapter)) {
    return param_count(AdapterKind::Lora, l->d_in(), l->d_out(), l->rank());
  }
  const auto& s = std::get<SmoaAdapter>(adapter);
  std::uint64_t total = 0;
  for (const auto& f : s.factors()) total += f.a.size() + f.b.size();
  return total;
}

}  // namespace smoa
