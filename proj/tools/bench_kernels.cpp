// Benchmark of the OpenMP kernels against the serial reference, plus a
// bit-equality check between the two paths.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include <omp.h>

#include "swa/kernels.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = gauss(rng);
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template <class F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int n = 512, in = 512, out = 512, reps = 5;
  if (argc > 1) n = std::atoi(argv[1]);
  if (argc > 2) in = std::atoi(argv[2]);
  if (argc > 3) out = std::atoi(argv[3]);
  if (argc > 4) reps = std::atoi(argv[4]);

  std::mt19937_64 rng(42);
  const auto x = random_vec(std::size_t(n) * in, rng);
  const auto w = random_vec(std::size_t(out) * in, rng);
  const auto b = random_vec(out, rng);
  const auto dz = random_vec(std::size_t(n) * out, rng);
  std::vector<double> z_par(std::size_t(n) * out), z_ser(z_par.size());
  std::vector<double> dx_par(std::size_t(n) * in), dx_ser(dx_par.size());
  std::vector<double> dw_par(std::size_t(out) * in), dw_ser(dw_par.size());
  std::vector<double> db_par(out), db_ser(out);

  std::printf("threads: %d   shape: n=%d in=%d out=%d\n", omp_get_max_threads(),
              n, in, out);
  std::printf("%-20s %12s %12s %9s %12s\n", "kernel", "omp GFLOP/s",
              "serial GFLOP/s", "speedup", "max|diff|");

  const double fwd_flops = 2.0 * n * in * out;
  {
    const double tp = time_best_of(reps, [&] {
      swa::kernels::linear_forward(x.data(), w.data(), b.data(), n, in, out,
                                   z_par.data());
    });
    const double ts = time_best_of(reps, [&] {
      swa::ref::linear_forward(x.data(), w.data(), b.data(), n, in, out,
                               z_ser.data());
    });
    std::printf("%-20s %12.2f %12.2f %8.2fx %12.3g\n", "linear_forward",
                fwd_flops / tp / 1e9, fwd_flops / ts / 1e9, ts / tp,
                max_abs_diff(z_par, z_ser));
  }
  {
    const double tp = time_best_of(reps, [&] {
      swa::kernels::linear_grad_input(dz.data(), w.data(), n, in, out,
                                      dx_par.data());
    });
    const double ts = time_best_of(reps, [&] {
      swa::ref::linear_grad_input(dz.data(), w.data(), n, in, out,
                                  dx_ser.data());
    });
    std::printf("%-20s %12.2f %12.2f %8.2fx %12.3g\n", "linear_grad_input",
                fwd_flops / tp / 1e9, fwd_flops / ts / 1e9, ts / tp,
                max_abs_diff(dx_par, dx_ser));
  }
  {
    const double tp = time_best_of(reps, [&] {
      swa::kernels::linear_grad_params(dz.data(), x.data(), n, in, out,
                                       dw_par.data(), db_par.data());
    });
    const double ts = time_best_of(reps, [&] {
      swa::ref::linear_grad_params(dz.data(), x.data(), n, in, out,
                                   dw_ser.data(), db_ser.data());
    });
    std::printf("%-20s %12.2f %12.2f %8.2fx %12.3g\n", "linear_grad_params",
                fwd_flops / tp / 1e9, fwd_flops / ts / 1e9, ts / tp,
                max_abs_diff(dw_par, dw_ser));
  }
  {
    std::vector<double> mean_p(out), var_p(out), mean_s(out), var_s(out);
    const double flops = 4.0 * n * out;
    const double tp = time_best_of(reps, [&] {
      swa::kernels::batch_mean_var(dz.data(), n, out, mean_p.data(), var_p.data());
    });
    const double ts = time_best_of(reps, [&] {
      swa::ref::batch_mean_var(dz.data(), n, out, mean_s.data(), var_s.data());
    });
    std::printf("%-20s %12.2f %12.2f %8.2fx %12.3g\n", "batch_mean_var",
                flops / tp / 1e9, flops / ts / 1e9, ts / tp,
                std::max(max_abs_diff(mean_p, mean_s), max_abs_diff(var_p, var_s)));
  }

  const bool identical = z_par == z_ser && dx_par == dx_ser && dw_par == dw_ser &&
                         db_par == db_ser;
  std::printf("bit-identical omp vs serial: %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
