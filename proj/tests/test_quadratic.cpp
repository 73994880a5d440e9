#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "swa/errors.hpp"
#include "swa/quadratic.hpp"

using namespace swa;

namespace {

std::vector<double> matmul(const std::vector<double>& a,
                           const std::vector<double>& b, int d) {
  std::vector<double> c(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < d; ++j)
        c[i * d + j] += a[i * d + k] * b[k * d + j];
  return c;
}

std::vector<double> transpose(const std::vector<double>& a, int d) {
  std::vector<double> t(a.size());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) t[j * d + i] = a[i * d + j];
  return t;
}

// Orthogonal matrix from a few Givens rotations.
std::vector<double> givens_q(int d, std::uint64_t seed) {
  std::vector<double> q(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) q[i * d + i] = 1.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 6.28);
  for (int r = 0; r < 2 * d; ++r) {
    const int i = static_cast<int>(rng() % d);
    int j = static_cast<int>(rng() % d);
    if (i == j) j = (j + 1) % d;
    const double th = angle(rng), c = std::cos(th), s = std::sin(th);
    for (int k = 0; k < d; ++k) {
      const double qi = q[i * d + k], qj = q[j * d + k];
      q[i * d + k] = c * qi - s * qj;
      q[j * d + k] = s * qi + c * qj;
    }
  }
  return q;
}

}  // namespace

TEST_CASE("cholesky matches a hand-factored 3x3 case and rejects non-SPD") {
  const std::vector<double> a = {4, 2, 2, 2, 5, 3, 2, 3, 6};
  std::vector<double> l;
  REQUIRE(linalg::cholesky(a, 3, l));
  const std::vector<double> expect = {2, 0, 0, 1, 2, 0, 1, 1, 2};
  for (int i = 0; i < 9; ++i) CHECK(l[i] == doctest::Approx(expect[i]).epsilon(1e-14));

  const std::vector<double> indef = {1, 2, 2, 1};  // eigenvalues 3, -1
  CHECK_FALSE(linalg::cholesky(indef, 2, l));
}

TEST_CASE("lambda_max via power iteration") {
  QuadraticProblem p = QuadraticProblem::diagonal(5, 0.5, 2.0, 1.0, 1);
  CHECK(linalg::lambda_max_spd(p.curvature, 5) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("problem validation: SPD curvature, SPD-or-zero noise") {
  QuadraticProblem p = QuadraticProblem::diagonal(3, 0.5, 2.0, 1.0, 1);
  CHECK_NOTHROW(p.validate());
  p.noise_cov.assign(9, 0.0);
  CHECK_NOTHROW(p.validate());  // exactly-zero noise is the noise-free case
  p.noise_cov[0] = -1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = QuadraticProblem::diagonal(3, 0.5, 2.0, 1.0, 1);
  p.curvature[0] = -4.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("unstable alpha is rejected before any iteration runs") {
  const QuadraticProblem p = QuadraticProblem::diagonal(4, 0.5, 2.0, 1.0, 2);
  CHECK_THROWS_AS(simulate_sgd(p, 1.01, 100, 10, 1), DomainError);  // 2/lam_max = 1
  CHECK_THROWS_AS(simulate_sgd(p, -0.1, 100, 10, 1), DomainError);
  CHECK_THROWS_AS(simulate_sgd(p, 0.5, 100, 100, 1), DomainError);  // burn_in >= iters
}

TEST_CASE("noise-free SGD contracts geometrically to the minimum") {
  QuadraticProblem p = QuadraticProblem::diagonal(4, 0.5, 1.5, 0.0, 3);
  const SimResult res = simulate_sgd(p, 0.4, 60, 0, 4);
  double prev = 1e300;
  for (std::size_t k = 0; k < res.iterates.size(); ++k) {
    double err = 0.0;
    for (int i = 0; i < p.dim; ++i) {
      const double e = res.iterates[k][i] - p.minimum[i];
      err += e * e;
    }
    err = std::sqrt(err);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-6);
  // Empirical covariance of the tail is essentially zero.
  const SimResult tail = simulate_sgd(p, 0.4, 200, 150, 4);
  for (double v : tail.stats.empirical_cov) CHECK(std::abs(v) < 1e-20);
  CHECK_FALSE(tail.stats.mahalanobis_valid);
  CHECK_THROWS_AS(ellipsoid_check(tail.stats, p.dim), DomainError);
}

TEST_CASE("1-d stationary mean sits within 3 correlated standard errors") {
  QuadraticProblem p;
  p.dim = 1;
  p.curvature = {1.0};
  p.minimum = {2.5};
  p.noise_cov = {1.0};
  const double alpha = 0.1;
  const std::int64_t n = 40000;
  const SimResult res = simulate_sgd(p, alpha, n + 2000, 2000, 5);
  // AR(1) with rho = 1 - alpha: var_st = alpha/(2 - alpha), and the mean of n
  // correlated samples has variance var_st/n * (1+rho)/(1-rho).
  const double rho = 1.0 - alpha;
  const double var_st = alpha / (2.0 - alpha);
  const double se = std::sqrt(var_st / n * (1.0 + rho) / (1.0 - rho));
  CHECK(std::abs(res.stats.empirical_mean[0] - 2.5) < 3.0 * se);
}

TEST_CASE("halving alpha shrinks the stationary covariance about linearly") {
  const QuadraticProblem p = QuadraticProblem::diagonal(6, 0.5, 2.0, 1.0, 7);
  const SimResult hi = simulate_sgd(p, 0.2, 42000, 2000, 8);
  const SimResult lo = simulate_sgd(p, 0.1, 42000, 2000, 8);
  for (int i = 0; i < p.dim; ++i) {
    const double vh = hi.stats.empirical_cov[i * p.dim + i];
    const double vl = lo.stats.empirical_cov[i * p.dim + i];
    CHECK(vl < vh);  // componentwise reduction
    CHECK(vh / vl > 1.4);
    CHECK(vh / vl < 2.6);  // within x[0.7, 1.3] of the linear-scaling factor 2
  }
}

TEST_CASE("ellipsoid ratio on exact Gaussian samples is 1 within 3%") {
  const int d = 20;
  QuadraticProblem p = QuadraticProblem::diagonal(d, 0.5, 2.0, 1.0, 9);
  std::vector<double> sigma(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) sigma[i * d + i] = 0.3 + 0.1 * i;
  std::vector<double> l;
  REQUIRE(linalg::cholesky(sigma, d, l));
  std::mt19937_64 rng(10);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> samples(100000, std::vector<double>(d));
  std::vector<double> z(d);
  for (auto& s : samples) {
    for (int i = 0; i < d; ++i) z[i] = gauss(rng);
    for (int i = 0; i < d; ++i) {
      double acc = p.minimum[i];
      for (int j = 0; j <= i; ++j) acc += l[i * d + j] * z[j];
      s[i] = acc;
    }
  }
  const StationaryStats stats = compute_stationary_stats(samples, p.minimum);
  const double ratio = ellipsoid_check(stats, d);
  CHECK(ratio > 0.97);
  CHECK(ratio < 1.03);
}

TEST_CASE("chi-squared tail: almost no mass deep inside the ellipsoid") {
  const int d = 100;
  // Chernoff bound for P(chi2_d < d/4): (x e^{1-x})^{d/2} with x = 1/4.
  const double bound = std::pow(0.25 * std::exp(0.75), d / 2.0);
  CHECK(bound < 0.01);

  std::vector<double> w_star(d, 0.0);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> samples(20000, std::vector<double>(d));
  for (auto& s : samples)
    for (auto& v : s) v = gauss(rng);
  const StationaryStats stats = compute_stationary_stats(samples, w_star);
  std::vector<double> cov_l;
  REQUIRE(linalg::cholesky(stats.empirical_cov, d, cov_l));
  std::vector<double> y(d);
  long inside = 0;
  for (const auto& s : samples) {
    linalg::lower_solve(cov_l, d, s.data(), y.data());
    double m = 0.0;
    for (double v : y) m += v * v;
    if (m < d / 4.0) ++inside;
  }
  CHECK(static_cast<double>(inside) / samples.size() < 0.01);
}

TEST_CASE("ellipsoid_check demands enough samples") {
  const int d = 10;
  std::vector<double> w_star(d, 0.0);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> samples(5 * d, std::vector<double>(d));
  for (auto& s : samples)
    for (auto& v : s) v = gauss(rng);
  const StationaryStats stats = compute_stationary_stats(samples, w_star);
  CHECK_THROWS_AS(ellipsoid_check(stats, d), DomainError);
}

TEST_CASE("simulate_sgd is reproducible and seeds decorrelate") {
  const QuadraticProblem p = QuadraticProblem::diagonal(5, 0.5, 2.0, 1.0, 13);
  const SimResult a = simulate_sgd(p, 0.2, 500, 100, 14);
  const SimResult b = simulate_sgd(p, 0.2, 500, 100, 14);
  CHECK(a.iterates == b.iterates);
  const SimResult c = simulate_sgd(p, 0.2, 500, 100, 15);
  CHECK(a.iterates != c.iterates);
}

TEST_CASE("noise-free averaging converges monotonically after the transient") {
  QuadraticProblem p = QuadraticProblem::diagonal(3, 0.5, 1.5, 0.0, 16);
  const ConvergenceResult res = averaging_convergence(p, 0.5, 2000, 17);
  REQUIRE(res.curve.size() > 5);
  for (std::size_t i = 1; i < res.curve.size(); ++i)
    CHECK(res.curve[i].second <= res.curve[i - 1].second * (1.0 + 1e-12));
  CHECK(res.curve.back().second < 1e-8);
}

TEST_CASE("averaging error is invariant under an orthogonal change of basis") {
  const int d = 6;
  QuadraticProblem p = QuadraticProblem::diagonal(d, 0.5, 2.0, 0.8, 18);
  const auto q = givens_q(d, 19);
  QuadraticProblem rotated;
  rotated.dim = d;
  rotated.curvature = matmul(matmul(q, p.curvature, d), transpose(q, d), d);
  rotated.noise_cov = matmul(matmul(q, p.noise_cov, d), transpose(q, d), d);
  rotated.minimum.assign(d, 0.0);
  linalg::matvec(q, d, p.minimum.data(), rotated.minimum.data());

  const ConvergenceResult base = averaging_convergence(p, 0.2, 5000, 20);
  const ConvergenceResult rot = averaging_convergence(rotated, 0.2, 5000, 20);
  REQUIRE(base.curve.size() == rot.curve.size());
  for (std::size_t i = 0; i < base.curve.size(); ++i) {
    CHECK(base.curve[i].first == rot.curve[i].first);
    CHECK(std::abs(base.curve[i].second - rot.curve[i].second) <
          1e-10 * std::max(1.0, base.curve[i].second));
  }
}

TEST_CASE("log_spaced grids are ascending, deduplicated, and end at n") {
  const auto marks = log_spaced(10000);
  CHECK(marks.front() == 1);
  CHECK(marks.back() == 10000);
  for (std::size_t i = 1; i < marks.size(); ++i) CHECK(marks[i] > marks[i - 1]);
}
