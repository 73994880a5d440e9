#include <algorithm>
#include <cmath>

#include "swa/kernels.hpp"

// Plain serial baselines. Accumulation order matches swa::kernels so the two
// paths agree bit-for-bit; tests and tools/bench_kernels rely on that.

namespace swa::ref {

void linear_forward(const double* x, const double* w, const double* b, int n,
                    int in, int out, double* z) {
  for (int i = 0; i < n; ++i)
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      for (int k = 0; k < in; ++k)
        acc += x[std::size_t(i) * in + k] * w[std::size_t(o) * in + k];
      z[std::size_t(i) * out + o] = acc;
    }
}

void linear_grad_input(const double* dz, const double* w, int n, int in,
                       int out, double* dx) {
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < in; ++k) {
      double acc = 0.0;
      for (int o = 0; o < out; ++o)
        acc += dz[std::size_t(i) * out + o] * w[std::size_t(o) * in + k];
      dx[std::size_t(i) * in + k] = acc;
    }
}

void linear_grad_params(const double* dz, const double* x, int n, int in,
                        int out, double* dw, double* db, bool accumulate) {
  for (int o = 0; o < out; ++o) {
    if (!accumulate)
      std::fill(dw + std::size_t(o) * in, dw + std::size_t(o) * in + in, 0.0);
    double acc_b = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = dz[std::size_t(i) * out + o];
      acc_b += g;
      for (int k = 0; k < in; ++k)
        dw[std::size_t(o) * in + k] += g * x[std::size_t(i) * in + k];
    }
    db[o] = accumulate ? db[o] + acc_b : acc_b;
  }
}

void batch_mean_var(const double* z, int n, int f, double* mean, double* var) {
  for (int j = 0; j < f; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += z[std::size_t(i) * f + j];
    const double m = s / n;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = z[std::size_t(i) * f + j] - m;
      sq += d * d;
    }
    mean[j] = m;
    var[j] = sq / n;
  }
}

void bn_forward(const double* z, int n, int f, const double* mean,
                const double* var, double eps, const double* gamma,
                const double* beta, double* out, double* xhat,
                double* inv_std) {
  for (int j = 0; j < f; ++j) {
    const double istd = 1.0 / std::sqrt(var[j] + eps);
    if (inv_std) inv_std[j] = istd;
    for (int i = 0; i < n; ++i) {
      const std::size_t idx = std::size_t(i) * f + j;
      const double xh = (z[idx] - mean[j]) * istd;
      if (xhat) xhat[idx] = xh;
      out[idx] = gamma[j] * xh + beta[j];
    }
  }
}

void bn_backward(const double* dout, const double* xhat,
                 const double* inv_std, int n, int f, const double* gamma,
                 double* dz, double* dgamma, double* dbeta, bool accumulate) {
  for (int j = 0; j < f; ++j) {
    double sum_d = 0.0, sum_dx = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::size_t idx = std::size_t(i) * f + j;
      sum_d += dout[idx];
      sum_dx += dout[idx] * xhat[idx];
    }
    dgamma[j] = accumulate ? dgamma[j] + sum_dx : sum_dx;
    dbeta[j] = accumulate ? dbeta[j] + sum_d : sum_d;
    const double mean_d = sum_d / n, mean_dx = sum_dx / n;
    for (int i = 0; i < n; ++i) {
      const std::size_t idx = std::size_t(i) * f + j;
      dz[idx] = gamma[j] * inv_std[j] * (dout[idx] - mean_d - xhat[idx] * mean_dx);
    }
  }
}

}  // namespace swa::ref
