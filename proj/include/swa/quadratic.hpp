#pragma once

#include <cstdint>
#include <vector>

namespace swa {

/// Small dense helpers for the quadratic sandbox (row-major d x d matrices).
namespace linalg {

/// Cholesky factorization A = L L^T; returns false when A is not SPD.
bool cholesky(const std::vector<double>& a, int d, std::vector<double>& lower);

void matvec(const std::vector<double>& a, int d, const double* x, double* y);

/// Largest eigenvalue of an SPD matrix by power iteration.
double lambda_max_spd(const std::vector<double>& a, int d);

/// Solves L x = b for lower-triangular L.
void lower_solve(const std::vector<double>& lower, int d, const double* b,
                 double* x);

}  // namespace linalg

/// Noisy quadratic: loss 1/2 (w - w_star)^T A (w - w_star) with additive
/// Gaussian gradient noise of covariance noise_cov (all-zero = noise-free).
struct QuadraticProblem {
  int dim = 0;
  std::vector<double> curvature;  // A, SPD
  std::vector<double> minimum;    // w_star
  std::vector<double> noise_cov;  // SPD or exactly zero

  void validate() const;

  /// Diagonal curvature with log-spaced eigenvalues in [lam_min, lam_max],
  /// isotropic noise, seeded random minimum in [-1, 1]^d.
  static QuadraticProblem diagonal(int d, double lam_min, double lam_max,
                                   double noise_sigma, std::uint64_t seed);
};

struct StationaryStats {
  std::vector<double> empirical_mean;
  std::vector<double> empirical_cov;  // d x d, biased, about the empirical mean
  double mahalanobis_sq_mean = 0.0;   // mean ||cov^{-1/2}(w - w_star)||^2
  bool mahalanobis_valid = false;     // false when the empirical cov is singular
  std::int64_t n_samples = 0;
  double raw_rms = 0.0;  // sqrt(mean ||w - w_star||^2)
  std::vector<std::pair<std::int64_t, double>> swa_error_curve;
};

struct SimResult {
  std::vector<std::vector<double>> iterates;  // post burn-in
  StationaryStats stats;
};

/// Constant-step SGD w <- w - alpha (A (w - w_star) + xi), xi ~ N(0, noise_cov),
/// started at w_star + 1. Requires 0 < alpha < 2 / lambda_max(A) (checked
/// before running) and burn_in < iters. Statistics cover the post-burn-in
/// iterates.
SimResult simulate_sgd(const QuadraticProblem& p, double alpha,
                       std::int64_t iters, std::int64_t burn_in,
                       std::uint64_t seed);

/// Empirical mean/covariance, RMS distance from w_star, and the whitened
/// squared-distance mean over a sample set (mahalanobis_valid = false when
/// the empirical covariance is not SPD).
StationaryStats compute_stationary_stats(
    const std::vector<std::vector<double>>& samples,
    const std::vector<double>& w_star);

/// mahalanobis_sq_mean / d, whitened by the empirical covariance. Near 1 in a
/// Gaussian stationary regime (chi-squared_d has mean d). Requires at least
/// 10*d samples and a nonsingular empirical covariance.
double ellipsoid_check(const StationaryStats& stats, int d);

struct ConvergenceResult {
  std::vector<std::pair<std::int64_t, double>> curve;  // (k, ||avg_k - w_star||)
  double raw_rms = 0.0;  // RMS distance of the raw averaged-phase iterates
};

/// Running-average error after a stationarity burn-in of iters/5 steps:
/// curve entries at logarithmically spaced k = 1..iters.
ConvergenceResult averaging_convergence(const QuadraticProblem& p, double alpha,
                                        std::int64_t iters, std::uint64_t seed);

/// Logarithmically spaced integer grid 1..n (deduplicated, ascending).
std::vector<std::int64_t> log_spaced(std::int64_t n, int per_decade = 12);

}  // namespace swa
