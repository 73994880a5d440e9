#include "swa/quadratic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "swa/errors.hpp"

namespace swa {

namespace linalg {

bool cholesky(const std::vector<double>& a, int d, std::vector<double>& lower) {
  lower.assign(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[static_cast<std::size_t>(i) * d + j];
      for (int k = 0; k < j; ++k)
        s -= lower[static_cast<std::size_t>(i) * d + k] *
             lower[static_cast<std::size_t>(j) * d + k];
      if (i == j) {
        if (s <= 0.0) return false;
        lower[static_cast<std::size_t>(i) * d + j] = std::sqrt(s);
      } else {
        lower[static_cast<std::size_t>(i) * d + j] =
            s / lower[static_cast<std::size_t>(j) * d + j];
      }
    }
  }
  return true;
}

void matvec(const std::vector<double>& a, int d, const double* x, double* y) {
  for (int i = 0; i < d; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += a[static_cast<std::size_t>(i) * d + j] * x[j];
    y[i] = s;
  }
}

double lambda_max_spd(const std::vector<double>& a, int d) {
  std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d))), w(d);
  double lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    matvec(a, d, v.data(), w.data());
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (int i = 0; i < d; ++i) v[i] = w[i] / norm;
    const double prev = lam;
    lam = norm;
    if (it > 10 && std::abs(lam - prev) <= 1e-12 * lam) break;
  }
  return lam;
}

void lower_solve(const std::vector<double>& lower, int d, const double* b,
                 double* x) {
  for (int i = 0; i < d; ++i) {
    double s = b[i];
    for (int j = 0; j < i; ++j) s -= lower[static_cast<std::size_t>(i) * d + j] * x[j];
    x[i] = s / lower[static_cast<std::size_t>(i) * d + i];
  }
}

}  // namespace linalg

namespace {

bool is_zero_matrix(const std::vector<double>& m) {
  return std::all_of(m.begin(), m.end(), [](double v) { return v == 0.0; });
}

}  // namespace

void QuadraticProblem::validate() const {
  if (dim < 1) throw DomainError("quadratic: dim must be >= 1");
  const std::size_t dd = static_cast<std::size_t>(dim) * dim;
  if (curvature.size() != dd || noise_cov.size() != dd ||
      static_cast<int>(minimum.size()) != dim)
    throw ShapeError("quadratic: matrix/vector sizes do not match dim");
  std::vector<double> l;
  if (!linalg::cholesky(curvature, dim, l))
    throw DomainError("quadratic: curvature matrix is not SPD");
  if (!is_zero_matrix(noise_cov) && !linalg::cholesky(noise_cov, dim, l))
    throw DomainError("quadratic: noise covariance must be SPD or exactly zero");
}

QuadraticProblem QuadraticProblem::diagonal(int d, double lam_min,
                                            double lam_max, double noise_sigma,
                                            std::uint64_t seed) {
  if (d < 1 || lam_min <= 0.0 || lam_max < lam_min)
    throw DomainError("quadratic: need d >= 1 and 0 < lam_min <= lam_max");
  QuadraticProblem p;
  p.dim = d;
  p.curvature.assign(static_cast<std::size_t>(d) * d, 0.0);
  p.noise_cov.assign(static_cast<std::size_t>(d) * d, 0.0);
  p.minimum.resize(d);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int i = 0; i < d; ++i) {
    const double frac = d == 1 ? 0.0 : static_cast<double>(i) / (d - 1);
    p.curvature[static_cast<std::size_t>(i) * d + i] =
        lam_min * std::pow(lam_max / lam_min, frac);
    p.noise_cov[static_cast<std::size_t>(i) * d + i] = noise_sigma * noise_sigma;
    p.minimum[i] = unif(rng);
  }
  return p;
}

SimResult simulate_sgd(const QuadraticProblem& p, double alpha,
                       std::int64_t iters, std::int64_t burn_in,
                       std::uint64_t seed) {
  p.validate();
  const double lam_max = linalg::lambda_max_spd(p.curvature, p.dim);
  if (alpha <= 0.0 || alpha >= 2.0 / lam_max)
    throw DomainError("simulate_sgd: alpha outside the stable range (0, 2/lambda_max)");
  if (burn_in < 0 || burn_in >= iters)
    throw DomainError("simulate_sgd: need 0 <= burn_in < iters");

  const int d = p.dim;
  const bool noisy = !is_zero_matrix(p.noise_cov);
  std::vector<double> noise_l;
  if (noisy && !linalg::cholesky(p.noise_cov, d, noise_l))
    throw DomainError("simulate_sgd: noise covariance not SPD");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> w = p.minimum;
  for (double& v : w) v += 1.0;  // start off-center; burn-in removes the transient
  std::vector<double> diff(d), grad(d), z(d);

  SimResult res;
  res.iterates.reserve(static_cast<std::size_t>(iters - burn_in));
  std::vector<double> avg(d, 0.0);
  const auto marks = log_spaced(iters - burn_in);
  std::size_t mark_pos = 0;

  for (std::int64_t it = 1; it <= iters; ++it) {
    for (int i = 0; i < d; ++i) diff[i] = w[i] - p.minimum[i];
    linalg::matvec(p.curvature, d, diff.data(), grad.data());
    if (noisy) {
      for (int i = 0; i < d; ++i) z[i] = gauss(rng);
      for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += noise_l[static_cast<std::size_t>(i) * d + j] * z[j];
        grad[i] += s;
      }
    }
    for (int i = 0; i < d; ++i) w[i] -= alpha * grad[i];
    if (it > burn_in) {
      res.iterates.push_back(w);
      const std::int64_t k = it - burn_in;
      const double kd = static_cast<double>(k);
      for (int i = 0; i < d; ++i) avg[i] += (w[i] - avg[i]) / kd;
      if (mark_pos < marks.size() && k == marks[mark_pos]) {
        double err = 0.0;
        for (int i = 0; i < d; ++i) {
          const double e = avg[i] - p.minimum[i];
          err += e * e;
        }
        res.stats.swa_error_curve.emplace_back(k, std::sqrt(err));
        ++mark_pos;
      }
    }
  }

  const auto curve = std::move(res.stats.swa_error_curve);
  res.stats = compute_stationary_stats(res.iterates, p.minimum);
  res.stats.swa_error_curve = std::move(curve);
  return res;
}

StationaryStats compute_stationary_stats(
    const std::vector<std::vector<double>>& samples,
    const std::vector<double>& w_star) {
  if (samples.empty()) throw DomainError("stationary stats: no samples");
  const int d = static_cast<int>(w_star.size());
  const std::int64_t n = static_cast<std::int64_t>(samples.size());
  StationaryStats st;
  st.n_samples = n;
  st.empirical_mean.assign(d, 0.0);
  for (const auto& s : samples)
    for (int i = 0; i < d; ++i) st.empirical_mean[i] += s[i];
  for (int i = 0; i < d; ++i) st.empirical_mean[i] /= static_cast<double>(n);

  st.empirical_cov.assign(static_cast<std::size_t>(d) * d, 0.0);
  double rms = 0.0;
  for (const auto& s : samples) {
    for (int i = 0; i < d; ++i) {
      const double di = s[i] - st.empirical_mean[i];
      for (int j = 0; j <= i; ++j)
        st.empirical_cov[static_cast<std::size_t>(i) * d + j] +=
            di * (s[j] - st.empirical_mean[j]);
      const double e = s[i] - w_star[i];
      rms += e * e;
    }
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = st.empirical_cov[static_cast<std::size_t>(i) * d + j] /
                       static_cast<double>(n);
      st.empirical_cov[static_cast<std::size_t>(i) * d + j] = v;
      st.empirical_cov[static_cast<std::size_t>(j) * d + i] = v;
    }
  st.raw_rms = std::sqrt(rms / static_cast<double>(n));

  std::vector<double> cov_l, y(d), centered(d);
  if (linalg::cholesky(st.empirical_cov, d, cov_l)) {
    double total = 0.0;
    for (const auto& s : samples) {
      for (int i = 0; i < d; ++i) centered[i] = s[i] - w_star[i];
      linalg::lower_solve(cov_l, d, centered.data(), y.data());
      for (int i = 0; i < d; ++i) total += y[i] * y[i];
    }
    st.mahalanobis_sq_mean = total / static_cast<double>(n);
    st.mahalanobis_valid = true;
  }
  return st;
}

double ellipsoid_check(const StationaryStats& stats, int d) {
  if (d < 1) throw DomainError("ellipsoid_check: d must be >= 1");
  if (stats.n_samples < 10 * static_cast<std::int64_t>(d))
    throw DomainError("ellipsoid_check: need at least 10*d samples");
  if (!stats.mahalanobis_valid)
    throw DomainError(
        "ellipsoid_check: singular empirical covariance; run more iterations");
  return stats.mahalanobis_sq_mean / static_cast<double>(d);
}

ConvergenceResult averaging_convergence(const QuadraticProblem& p, double alpha,
                                        std::int64_t iters, std::uint64_t seed) {
  if (iters < 1) throw DomainError("averaging_convergence: iters must be >= 1");
  const std::int64_t burn = iters / 5;
  SimResult sim = simulate_sgd(p, alpha, burn + iters, burn, seed);
  ConvergenceResult res;
  res.curve = std::move(sim.stats.swa_error_curve);
  res.raw_rms = sim.stats.raw_rms;
  return res;
}

std::vector<std::int64_t> log_spaced(std::int64_t n, int per_decade) {
  std::vector<std::int64_t> marks;
  if (n < 1) return marks;
  double v = 1.0;
  const double step = std::pow(10.0, 1.0 / per_decade);
  std::int64_t last = 0;
  while (true) {
    const std::int64_t k = std::min<std::int64_t>(n, std::llround(v));
    if (k > last) {
      marks.push_back(k);
      last = k;
    }
    if (k >= n) break;
    v *= step;
  }
  return marks;
}

}  // namespace swa
