#pragma once

#include <cstdint>
#include <random>

#include "smoa/matrix.hpp"

namespace smoa {

using Rng = std::mt19937_64;

/// i.i.d. N(0, scale^2) entries.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0);

/// rows x cols matrix with orthonormal columns (cols <= rows), Haar-like via
/// Gram-Schmidt on a Gaussian draw.
Matrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng);

/// Deterministic child seed for trial `index` of a run seeded with `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace smoa
