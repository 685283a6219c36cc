#include "smoa/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "smoa/errors.hpp"
#include "smoa/random.hpp"

namespace smoa {

ActivationSample::ActivationSample(Matrix data) : data_(std::move(data)) {}

Matrix ActivationSample::covariance() const {
  const std::size_t d = data_.rows();
  const std::size_t n = data_.cols();
  Matrix centred = data_;
  for (std::size_t i = 0; i < d; ++i) {
    double mean = 0.0;
    for (std::size_t s = 0; s < n; ++s) mean += data_(i, s);
    mean /= static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) centred(i, s) -= mean;
  }
  Matrix cov(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    auto ri = centred.row(i);
    for (std::size_t j = i; j < d; ++j) {
      auto rj = centred.row(j);
      double s = 0.0;
      for (std::size_t t = 0; t < n; ++t) s += ri[t] * rj[t];
      cov(i, j) = cov(j, i) = s / static_cast<double>(n);
    }
  }
  return cov;
}

SymmetricEigen ActivationSample::eigen() const { return symmetric_eigen(covariance()); }

double aspect_ratio(std::size_t rows, std::size_t cols) {
  return static_cast<double>(std::min(rows, cols)) / static_cast<double>(std::max(rows, cols));
}

double mp_bulk_edge(std::size_t rows, std::size_t cols, double noise_scale) {
  if (rows == 0 || cols == 0 || !(noise_scale > 0.0)) {
    throw ArgumentError("mp_bulk_edge: dimensions and noise scale must be positive");
  }
  return 1.0 + std::sqrt(aspect_ratio(rows, cols));
}

double mp_density(double x, double lambda) {
  const double a = (1.0 - std::sqrt(lambda)) * (1.0 - std::sqrt(lambda));
  const double b = (1.0 + std::sqrt(lambda)) * (1.0 + std::sqrt(lambda));
  if (x <= a || x >= b || x <= 0.0) return 0.0;
  return std::sqrt((b - x) * (x - a)) / (2.0 * std::numbers::pi * lambda * x);
}

namespace {

// With x = c - h cos(theta) the density becomes smooth in theta on [0, pi]:
// f(x) dx = h^2 sin^2(theta) / (2 pi lambda x) dtheta.
double theta_integrand(double theta, double lambda) {
  const double c = 1.0 + lambda;
  const double h = 2.0 * std::sqrt(lambda);
  const double x = c - h * std::cos(theta);
  const double s = std::sin(theta);
  // Square case at theta = 0: x vanishes and the limit is (1 + cos theta) / pi.
  if (x <= 0.0) return (1.0 + std::cos(theta)) / std::numbers::pi;
  return h * h * s * s / (2.0 * std::numbers::pi * lambda * x);
}

double simpson(double lo, double hi, double lambda, int intervals = 4096) {
  if (hi <= lo) return 0.0;
  const double step = (hi - lo) / intervals;
  double sum = theta_integrand(lo, lambda) + theta_integrand(hi, lambda);
  for (int i = 1; i < intervals; ++i) {
    sum += (i % 2 ? 4.0 : 2.0) * theta_integrand(lo + i * step, lambda);
  }
  return sum * step / 3.0;
}

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || lambda > 1.0) throw ArgumentError("aspect ratio must lie in (0, 1]");
}

}  // namespace

double mp_cdf(double x, double lambda) {
  check_lambda(lambda);
  const double c = 1.0 + lambda;
  const double h = 2.0 * std::sqrt(lambda);
  if (x <= c - h) return 0.0;
  if (x >= c + h) return 1.0;
  const double theta = std::acos(std::clamp((c - x) / h, -1.0, 1.0));
  return simpson(0.0, theta, lambda) / simpson(0.0, std::numbers::pi, lambda);
}

double mp_median(double lambda) {
  check_lambda(lambda);
  const double c = 1.0 + lambda;
  const double h = 2.0 * std::sqrt(lambda);
  const double total = simpson(0.0, std::numbers::pi, lambda);
  double lo = 0.0;
  double hi = std::numbers::pi;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (simpson(0.0, mid, lambda) / total < 0.5) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return c - h * std::cos(0.5 * (lo + hi));
}

double estimate_noise_scale(std::span<const double> singular_values, std::size_t rows, std::size_t cols) {
  std::vector<double> sv(singular_values.begin(), singular_values.end());
  if (sv.empty()) throw NumericalError("noise scale estimation: empty spectrum");
  std::sort(sv.begin(), sv.end());
  const std::size_t p = sv.size();
  const double median = p % 2 ? sv[p / 2] : 0.5 * (sv[p / 2 - 1] + sv[p / 2]);
  if (!(median > 0.0)) {
    throw NumericalError("noise scale estimation: median singular value is zero for " + shape_string(rows, cols) +
                         " matrix; supply a noise scale");
  }
  const double n = static_cast<double>(std::max(rows, cols));
  return median / std::sqrt(n * mp_median(aspect_ratio(rows, cols)));
}

std::vector<double> normalized_spectrum(std::span<const double> singular_values, std::size_t rows,
                                        std::size_t cols, std::optional<double> noise_scale) {
  if (noise_scale && !(*noise_scale > 0.0)) throw ArgumentError("noise scale must be positive");
  const double scale = noise_scale ? *noise_scale : estimate_noise_scale(singular_values, rows, cols);
  const double denom = scale * std::sqrt(static_cast<double>(std::max(rows, cols)));
  std::vector<double> nu;
  nu.reserve(singular_values.size());
  for (double s : singular_values) nu.push_back(s / denom);
  return nu;
}

std::vector<double> normalized_spectrum(const Matrix& w, std::optional<double> noise_scale) {
  return normalized_spectrum(singular_values(w), w.rows(), w.cols(), noise_scale);
}

std::size_t count_outliers(const Matrix& w, std::optional<double> noise_scale) {
  const auto nu = normalized_spectrum(w, noise_scale);
  const double edge = mp_bulk_edge(w.rows(), w.cols());
  return static_cast<std::size_t>(std::count_if(nu.begin(), nu.end(), [&](double v) { return v > edge; }));
}

std::vector<OverlapScore> overlap_scores(const Matrix& right_vectors, const Matrix& eigenvectors) {
  if (right_vectors.rows() != eigenvectors.rows()) {
    throw DimensionError("overlap_scores: singular vectors have dimension " + std::to_string(right_vectors.rows()) +
                         ", activations " + std::to_string(eigenvectors.rows()));
  }
  const Matrix inner = right_vectors.transpose() * eigenvectors;
  std::vector<OverlapScore> out;
  out.reserve(inner.rows());
  for (std::size_t k = 0; k < inner.rows(); ++k) {
    double best = 0.0;
    for (double v : inner.row(k)) best = std::max(best, v * v);
    out.push_back({k + 1, std::min(best, 1.0)});
  }
  return out;
}

std::vector<OverlapScore> overlap_scores(const Matrix& w, const ActivationSample& activations) {
  if (activations.dimension() != w.cols()) {
    throw DimensionError("overlap_scores: activation dimension " + std::to_string(activations.dimension()) +
                         " does not match weight columns " + std::to_string(w.cols()));
  }
  return overlap_scores(svd(w).right, activations.eigen().vectors);
}

OverlapBaseline random_overlap_baseline(const Matrix& eigenvectors, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw ArgumentError("random_overlap_baseline: need at least one sample");
  Rng rng(seed);
  Matrix probes = gaussian_matrix(eigenvectors.rows(), samples, rng);
  for (std::size_t s = 0; s < samples; ++s) {
    double norm = 0.0;
    for (std::size_t i = 0; i < probes.rows(); ++i) norm += probes(i, s) * probes(i, s);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < probes.rows(); ++i) probes(i, s) /= norm;
  }
  const auto scores = overlap_scores(probes, eigenvectors);
  double mean = 0.0;
  for (const auto& s : scores) mean += s.score;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (const auto& s : scores) var += (s.score - mean) * (s.score - mean);
  var /= static_cast<double>(scores.size() > 1 ? scores.size() - 1 : 1);
  return {mean, std::sqrt(var)};
}

SpectralReport full_report(const Matrix& w, const ActivationSample* activations, const ReportOptions& options) {
  const auto d = svd(w);
  SpectralReport rep;
  rep.rows = w.rows();
  rep.cols = w.cols();
  rep.seed = options.seed;
  rep.singular_values = d.singular_values;
  rep.epsilon = options.epsilon >= 0.0 ? options.epsilon
                                       : default_rank_tolerance(w.rows(), w.cols(), d.singular_values.front());
  rep.noise_scale_estimated = !options.noise_scale.has_value();
  rep.noise_scale = options.noise_scale ? *options.noise_scale
                                        : estimate_noise_scale(d.singular_values, w.rows(), w.cols());
  rep.normalized_values = normalized_spectrum(d.singular_values, w.rows(), w.cols(), rep.noise_scale);
  rep.bulk_edge = mp_bulk_edge(w.rows(), w.cols());
  rep.outlier_count = static_cast<std::size_t>(std::count_if(rep.normalized_values.begin(), rep.normalized_values.end(),
                                                             [&](double v) { return v > rep.bulk_edge; }));
  rep.numerical_rank = count_above(d.singular_values, rep.epsilon);
  for (std::size_t r = 0; r <= d.singular_values.size(); ++r) {
    rep.tail_energy_curve.emplace_back(r, tail_energy(d.singular_values, r));
  }
  if (activations) {
    if (activations->dimension() != w.cols()) {
      throw DimensionError("full_report: activation dimension " + std::to_string(activations->dimension()) +
                           " does not match weight columns " + std::to_string(w.cols()));
    }
    const auto eig = activations->eigen();
    rep.overlaps = overlap_scores(d.right, eig.vectors);
    const auto base = random_overlap_baseline(eig.vectors, options.baseline_samples, options.seed);
    rep.bulk_overlap_mean = base.mean;
    rep.bulk_overlap_sigma = base.sigma;
  }
  return rep;
}

std::vector<HistogramBin> nu_histogram(const SpectralReport& report, std::size_t bins) {
  if (bins == 0) throw ArgumentError("nu_histogram: bins must be positive");
  const double top_value = report.normalized_values.empty() ? 0.0 : report.normalized_values.front();
  const double top = 1.05 * std::max(top_value, report.bulk_edge);
  const double width = top / static_cast<double>(bins);
  const double lambda = aspect_ratio(report.rows, report.cols);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].left = width * static_cast<double>(b);
    out[b].right = width * static_cast<double>(b + 1);
    const double centre = 0.5 * (out[b].left + out[b].right);
    out[b].mp_density = 2.0 * centre * mp_density(centre * centre, lambda);
  }
  for (double v : report.normalized_values) {
    auto b = static_cast<std::size_t>(v / width);
    out[std::min(b, bins - 1)].count += 1;
  }
  return out;
}

}  // namespace smoa
