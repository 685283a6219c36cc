#include "smoa/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "smoa/errors.hpp"

namespace smoa {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kSignThreshold = 1e-10;

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double norm2(const double* a, std::size_t n) {
  double scale = 0.0;
  double ssq = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == 0.0) continue;
    const double x = std::abs(a[i]);
    if (scale < x) {
      ssq = 1.0 + ssq * (scale / x) * (scale / x);
      scale = x;
    } else {
      ssq += (x / scale) * (x / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

void rotate(double* x, double* y, std::size_t n, double c, double s) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

// Column-major working copy so Jacobi rotations touch contiguous memory.
struct Columns {
  std::size_t len;
  std::size_t count;
  std::vector<double> data;

  double* col(std::size_t j) { return data.data() + j * len; }
  const double* col(std::size_t j) const { return data.data() + j * len; }
};

// Fills columns whose norm is zero with unit vectors orthogonal to the rest.
void complete_basis(Columns& u, const std::vector<bool>& filled) {
  for (std::size_t j = 0; j < u.count; ++j) {
    if (filled[j]) continue;
    std::vector<double> best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < u.len; ++e) {
      std::vector<double> cand(u.len, 0.0);
      cand[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t p = 0; p < u.count; ++p) {
          if (p == j || (!filled[p] && p > j)) continue;
          const double d = dot(u.col(p), cand.data(), u.len);
          for (std::size_t i = 0; i < u.len; ++i) cand[i] -= d * u.col(p)[i];
        }
      }
      const double n = norm2(cand.data(), u.len);
      if (n > best_norm) {
        best_norm = n;
        best = std::move(cand);
      }
      if (best_norm > 0.5) break;
    }
    for (std::size_t i = 0; i < u.len; ++i) u.col(j)[i] = best[i] / best_norm;
  }
}

// Hestenes Jacobi on a tall (rows >= cols) matrix given as column-major data.
SpectralDecomposition jacobi_tall(Columns a, const SvdOptions& options, std::size_t orig_rows,
                                  std::size_t orig_cols) {
  const std::size_t m = a.len;
  const std::size_t n = a.count;
  Columns v{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t j = 0; j < n; ++j) v.col(j)[j] = 1.0;

  const double tol = kEps * static_cast<double>(m);
  // Columns at rounding-noise level relative to the whole matrix are left
  // alone: their mutual angles carry no information and never settle.
  double frob = 0.0;
  for (std::size_t j = 0; j < n; ++j) frob = std::hypot(frob, norm2(a.col(j), m));
  const double negligible = kEps * frob;
  const double negligible_sq = negligible * negligible;
  bool converged = false;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot(a.col(p), a.col(p), m);
        const double beta = dot(a.col(q), a.col(q), m);
        const double gamma = dot(a.col(p), a.col(q), m);
        if (alpha <= negligible_sq || beta <= negligible_sq) continue;
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(a.col(p), a.col(q), m, c, s);
        rotate(v.col(p), v.col(q), n, c, s);
      }
    }
  }
  if (!converged) {
    throw NumericalError("svd: Jacobi iteration did not converge within " +
                         std::to_string(options.max_sweeps) + " sweeps for " +
                         shape_string(orig_rows, orig_cols) + " matrix");
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    sigma[j] = norm2(a.col(j), m);
    if (sigma[j] <= negligible) sigma[j] = 0.0;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Columns u{m, n, std::vector<double>(m * n, 0.0)};
  Columns vs{n, n, std::vector<double>(n * n, 0.0)};
  std::vector<double> sorted(n);
  std::vector<bool> filled(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    sorted[k] = sigma[j];
    std::copy(v.col(j), v.col(j) + n, vs.col(k));
    if (sigma[j] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) u.col(k)[i] = a.col(j)[i] / sigma[j];
      filled[k] = true;
    }
  }
  complete_basis(u, filled);

  for (std::size_t k = 0; k < n; ++k) {
    const double* col = u.col(k);
    std::size_t first = 0;
    while (first < m && std::abs(col[first]) <= kSignThreshold) ++first;
    if (first < m && col[first] < 0.0) {
      for (std::size_t i = 0; i < m; ++i) u.col(k)[i] = -u.col(k)[i];
      for (std::size_t i = 0; i < n; ++i) vs.col(k)[i] = -vs.col(k)[i];
    }
  }

  Matrix left(m, n);
  Matrix right(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < m; ++i) left(i, k) = u.col(k)[i];
    for (std::size_t i = 0; i < n; ++i) right(i, k) = vs.col(k)[i];
  }
  return SpectralDecomposition{std::move(left), std::move(sorted), std::move(right)};
}

}  // namespace

Matrix SpectralDecomposition::reconstruct() const {
  Matrix scaled = left;
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t k = 0; k < scaled.cols(); ++k) scaled(i, k) *= singular_values[k];
  return scaled * right.transpose();
}

SpectralDecomposition svd(const Matrix& w, const SvdOptions& options) {
  for (double x : w.data()) {
    if (!std::isfinite(x)) throw NumericalError("svd: non-finite entry in " + shape_string(w.rows(), w.cols()));
  }
  const bool tall = w.rows() >= w.cols();
  const std::size_t len = tall ? w.rows() : w.cols();
  const std::size_t count = tall ? w.cols() : w.rows();
  Columns a{len, count, std::vector<double>(len * count)};
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      if (tall) {
        a.col(j)[i] = w(i, j);
      } else {
        a.col(i)[j] = w(i, j);
      }
    }
  }
  auto d = jacobi_tall(std::move(a), options, w.rows(), w.cols());
  if (tall) return d;

  // W^T = U' S V'^T  =>  W = V' S U'^T; re-apply the sign rule to the new left side.
  SpectralDecomposition out{std::move(d.right), std::move(d.singular_values), std::move(d.left)};
  for (std::size_t k = 0; k < out.left.cols(); ++k) {
    std::size_t first = 0;
    while (first < out.left.rows() && std::abs(out.left(first, k)) <= kSignThreshold) ++first;
    if (first < out.left.rows() && out.left(first, k) < 0.0) {
      for (std::size_t i = 0; i < out.left.rows(); ++i) out.left(i, k) = -out.left(i, k);
      for (std::size_t i = 0; i < out.right.rows(); ++i) out.right(i, k) = -out.right(i, k);
    }
  }
  return out;
}

std::vector<double> singular_values(const Matrix& w, const SvdOptions& options) {
  return svd(w, options).singular_values;
}

double default_rank_tolerance(std::size_t rows, std::size_t cols, double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) * sigma_max * kEps;
}

double default_rank_tolerance(const Matrix& w) {
  const auto sv = singular_values(w);
  return default_rank_tolerance(w.rows(), w.cols(), sv.front());
}

std::size_t count_above(std::span<const double> singular_values, double epsilon) {
  return static_cast<std::size_t>(
      std::count_if(singular_values.begin(), singular_values.end(), [&](double s) { return s > epsilon; }));
}

std::size_t numerical_rank(const Matrix& w, double epsilon) {
  if (epsilon < 0.0) throw RangeError("numerical_rank: epsilon must be nonnegative");
  return count_above(singular_values(w), epsilon);
}

std::size_t numerical_rank(const Matrix& w) {
  const auto sv = singular_values(w);
  return count_above(sv, default_rank_tolerance(w.rows(), w.cols(), sv.front()));
}

Matrix truncated_svd(const Matrix& w, std::size_t r) {
  const std::size_t m = std::min(w.rows(), w.cols());
  if (r > m) {
    throw RangeError("truncated_svd: rank " + std::to_string(r) + " exceeds min dimension " + std::to_string(m));
  }
  if (r == m) return w;
  Matrix out(w.rows(), w.cols());
  if (r == 0) return out;
  const auto d = svd(w);
  for (std::size_t k = 0; k < r; ++k) {
    const double s = d.singular_values[k];
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const double us = d.left(i, k) * s;
      for (std::size_t j = 0; j < w.cols(); ++j) out(i, j) += us * d.right(j, k);
    }
  }
  return out;
}

double tail_energy(std::span<const double> singular_values, std::size_t r) {
  if (r > singular_values.size()) {
    throw RangeError("tail_energy: rank " + std::to_string(r) + " exceeds spectrum length " +
                     std::to_string(singular_values.size()));
  }
  double sum = 0.0;
  for (std::size_t i = singular_values.size(); i > r; --i) sum += singular_values[i - 1] * singular_values[i - 1];
  return sum;
}

double tail_energy(const Matrix& w, std::size_t r) {
  const std::size_t m = std::min(w.rows(), w.cols());
  if (r > m) {
    throw RangeError("tail_energy: rank " + std::to_string(r) + " exceeds min dimension " + std::to_string(m));
  }
  if (r == m) return 0.0;
  return tail_energy(singular_values(w), r);
}

SymmetricEigen symmetric_eigen(const Matrix& s, int max_sweeps) {
  if (s.rows() != s.cols()) throw DimensionError("symmetric_eigen: matrix is " + shape_string(s.rows(), s.cols()));
  const std::size_t n = s.rows();
  Matrix a = s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (s(i, j) + s(j, i));
  Matrix v = Matrix::identity(n);

  const double scale = std::max(a.frobenius_norm(), std::numeric_limits<double>::min());
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= kEps * scale) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) > kEps * scale * static_cast<double>(n)) {
      throw NumericalError("symmetric_eigen: no convergence for " + shape_string(n, n) + " matrix");
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

}  // namespace smoa
