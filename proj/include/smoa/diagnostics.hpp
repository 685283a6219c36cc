#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "smoa/matrix.hpp"
#include "smoa/spectrum.hpp"

namespace smoa {

/// Activation samples as columns of a d_in x n matrix.
class ActivationSample {
 public:
  explicit ActivationSample(Matrix data);

  const Matrix& data() const noexcept { return data_; }
  std::size_t dimension() const noexcept { return data_.rows(); }
  std::size_t count() const noexcept { return data_.cols(); }

  /// Biased (1/n) covariance of the mean-centred samples, symmetrized.
  Matrix covariance() const;
  /// Eigenpairs of covariance(), descending.
  SymmetricEigen eigen() const;

 private:
  Matrix data_;
};

struct OverlapScore {
  std::size_t index = 0;  ///< 1-based singular direction
  double score = 0.0;
};

struct SpectralReport {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double epsilon = 0.0;
  double noise_scale = 0.0;
  bool noise_scale_estimated = false;
  std::uint64_t seed = 0;

  std::vector<double> singular_values;
  std::vector<double> normalized_values;
  double bulk_edge = 0.0;
  std::size_t outlier_count = 0;
  std::size_t numerical_rank = 0;
  std::vector<std::pair<std::size_t, double>> tail_energy_curve;
  std::vector<OverlapScore> overlaps;
  double bulk_overlap_mean = 0.0;
  double bulk_overlap_sigma = 0.0;
};

/// Aspect ratio lambda = min(rows, cols) / max(rows, cols).
double aspect_ratio(std::size_t rows, std::size_t cols);

/// Upper edge of the Marchenko-Pastur bulk in normalized units, 1 + sqrt(lambda).
/// The normalization already absorbs the noise scale, so it does not move the edge.
double mp_bulk_edge(std::size_t rows, std::size_t cols, double noise_scale = 1.0);

/// Marchenko-Pastur density of x = nu^2 with ratio lambda (0 outside the support).
double mp_density(double x, double lambda);
/// CDF of the same law, by quadrature.
double mp_cdf(double x, double lambda);
/// Median of x = nu^2, by bisection on the CDF to 1e-10.
double mp_median(double lambda);

/// sigma_hat = median(sigma_i) / sqrt(n * mp_median(lambda)), n = max(rows, cols).
double estimate_noise_scale(std::span<const double> singular_values, std::size_t rows, std::size_t cols);

/// nu_i = sigma_i / (sigma_hat sqrt(n)), n = max(rows, cols).
std::vector<double> normalized_spectrum(std::span<const double> singular_values, std::size_t rows,
                                        std::size_t cols, std::optional<double> noise_scale = std::nullopt);
std::vector<double> normalized_spectrum(const Matrix& w, std::optional<double> noise_scale = std::nullopt);

std::size_t count_outliers(const Matrix& w, std::optional<double> noise_scale = std::nullopt);

/// score_k = max_l <v_k, e_l>^2 between right singular vectors of W and
/// eigenvectors of the activation covariance.
std::vector<OverlapScore> overlap_scores(const Matrix& w, const ActivationSample& activations);
std::vector<OverlapScore> overlap_scores(const Matrix& right_vectors, const Matrix& eigenvectors);

struct OverlapBaseline {
  double mean = 0.0;
  double sigma = 0.0;
};

/// Score distribution of uniformly random unit vectors against `eigenvectors`.
OverlapBaseline random_overlap_baseline(const Matrix& eigenvectors, std::size_t samples, std::uint64_t seed);

struct ReportOptions {
  /// Rank tolerance; negative selects the default.
  double epsilon = -1.0;
  std::optional<double> noise_scale;
  std::uint64_t seed = 0;
  std::size_t baseline_samples = 200;
};

SpectralReport full_report(const Matrix& w, const ActivationSample* activations, const ReportOptions& options = {});

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
  double mp_density = 0.0;  ///< density of nu at the bin centre
};

/// Equal-width histogram of normalized values with the MP density of nu.
std::vector<HistogramBin> nu_histogram(const SpectralReport& report, std::size_t bins = 40);

}  // namespace smoa
