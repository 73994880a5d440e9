#include "swa/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace swa::kernels {

namespace {
// Minimum element count before a loop is worth a parallel region.
constexpr long kParallelCutoff = 1 << 15;
}  // namespace

void linear_forward(const double* x, const double* w, const double* b, int n,
                    int in, int out, double* z) {
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * out * in > kParallelCutoff)
  for (int i = 0; i < n; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * in;
    double* zi = z + static_cast<std::size_t>(i) * out;
    for (int o = 0; o < out; ++o) {
      const double* wo = w + static_cast<std::size_t>(o) * in;
      double acc = b[o];
      for (int k = 0; k < in; ++k) acc += xi[k] * wo[k];
      zi[o] = acc;
    }
  }
}

void linear_grad_input(const double* dz, const double* w, int n, int in,
                       int out, double* dx) {
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * out * in > kParallelCutoff)
  for (int i = 0; i < n; ++i) {
    const double* dzi = dz + static_cast<std::size_t>(i) * out;
    double* dxi = dx + static_cast<std::size_t>(i) * in;
    for (int k = 0; k < in; ++k) {
      double acc = 0.0;
      for (int o = 0; o < out; ++o) acc += dzi[o] * w[static_cast<std::size_t>(o) * in + k];
      dxi[k] = acc;
    }
  }
}

void linear_grad_params(const double* dz, const double* x, int n, int in,
                        int out, double* dw, double* db, bool accumulate) {
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * out * in > kParallelCutoff)
  for (int o = 0; o < out; ++o) {
    double* dwo = dw + static_cast<std::size_t>(o) * in;
    if (!accumulate) std::fill(dwo, dwo + in, 0.0);
    double acc_b = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = dz[static_cast<std::size_t>(i) * out + o];
      acc_b += g;
      const double* xi = x + static_cast<std::size_t>(i) * in;
      for (int k = 0; k < in; ++k) dwo[k] += g * xi[k];
    }
    db[o] = accumulate ? db[o] + acc_b : acc_b;
  }
}

void batch_mean_var(const double* z, int n, int f, double* mean, double* var) {
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * f > kParallelCutoff)
  for (int j = 0; j < f; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += z[static_cast<std::size_t>(i) * f + j];
    const double m = s / n;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = z[static_cast<std::size_t>(i) * f + j] - m;
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
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * f > kParallelCutoff)
  for (int j = 0; j < f; ++j) {
    const double istd = 1.0 / std::sqrt(var[j] + eps);
    if (inv_std) inv_std[j] = istd;
    const double g = gamma[j], bt = beta[j], m = mean[j];
    for (int i = 0; i < n; ++i) {
      const std::size_t idx = static_cast<std::size_t>(i) * f + j;
      const double xh = (z[idx] - m) * istd;
      if (xhat) xhat[idx] = xh;
      out[idx] = g * xh + bt;
    }
  }
}

void bn_backward(const double* dout, const double* xhat,
                 const double* inv_std, int n, int f, const double* gamma,
                 double* dz, double* dgamma, double* dbeta, bool accumulate) {
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * f > kParallelCutoff)
  for (int j = 0; j < f; ++j) {
    double sum_d = 0.0, sum_dx = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::size_t idx = static_cast<std::size_t>(i) * f + j;
      sum_d += dout[idx];
      sum_dx += dout[idx] * xhat[idx];
    }
    dgamma[j] = accumulate ? dgamma[j] + sum_dx : sum_dx;
    dbeta[j] = accumulate ? dbeta[j] + sum_d : sum_d;
    const double g = gamma[j], istd = inv_std[j];
    const double mean_d = sum_d / n, mean_dx = sum_dx / n;
    for (int i = 0; i < n; ++i) {
      const std::size_t idx = static_cast<std::size_t>(i) * f + j;
      dz[idx] = g * istd * (dout[idx] - mean_d - xhat[idx] * mean_dx);
    }
  }
}

void activation_forward(Activation act, const double* z, std::size_t m,
                        double* a) {
  if (act == Activation::relu) {
#pragma omp parallel for schedule(static) if (static_cast<long>(m) > kParallelCutoff)
    for (long i = 0; i < static_cast<long>(m); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
  } else {
#pragma omp parallel for schedule(static) if (static_cast<long>(m) > kParallelCutoff)
    for (long i = 0; i < static_cast<long>(m); ++i) a[i] = std::tanh(z[i]);
  }
}

void activation_backward(Activation act, const double* dout, const double* z,
                         const double* a, std::size_t m, double* dz) {
  if (act == Activation::relu) {
#pragma omp parallel for schedule(static) if (static_cast<long>(m) > kParallelCutoff)
    for (long i = 0; i < static_cast<long>(m); ++i) dz[i] = z[i] > 0.0 ? dout[i] : 0.0;
  } else {
#pragma omp parallel for schedule(static) if (static_cast<long>(m) > kParallelCutoff)
    for (long i = 0; i < static_cast<long>(m); ++i) dz[i] = dout[i] * (1.0 - a[i] * a[i]);
  }
}

void softmax_rows(const double* logits, int n, int k, double* probs) {
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * k > kParallelCutoff)
  for (int i = 0; i < n; ++i) {
    const double* li = logits + static_cast<std::size_t>(i) * k;
    double* pi = probs + static_cast<std::size_t>(i) * k;
    double mx = li[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, li[j]);
    double denom = 0.0;
    for (int j = 0; j < k; ++j) {
      pi[j] = std::exp(li[j] - mx);
      denom += pi[j];
    }
    const double inv = 1.0 / denom;
    for (int j = 0; j < k; ++j) pi[j] *= inv;
  }
}

double softmax_xent(const double* logits, const int* labels, int n, int k,
                    double* probs, double* dlogits) {
  softmax_rows(logits, n, k, probs);
  // Serial reduction keeps the loss bit-deterministic across thread counts.
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double p = probs[static_cast<std::size_t>(i) * k + labels[i]];
    loss -= std::log(std::max(p, 1e-300));
  }
  loss /= n;
  if (dlogits) {
    const double invn = 1.0 / n;
    for (int i = 0; i < n; ++i) {
      const double* pi = probs + static_cast<std::size_t>(i) * k;
      double* di = dlogits + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < k; ++j) di[j] = pi[j] * invn;
      di[labels[i]] -= invn;
    }
  }
  return loss;
}

}  // namespace swa::kernels
