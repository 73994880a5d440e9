#pragma once

#include <cstddef>

namespace swa {

enum class Activation { relu, tanh_fn };

/// Dense kernels used by the MLP forward/backward passes. OpenMP-parallel
/// over rows (or features), with each output element produced by exactly one
/// thread through a serial inner loop, so results are bit-identical to the
/// serial reference in swa::ref for any thread count. Parallel regions are
/// gated by a work threshold; desk-scale batches stay on the serial path.
namespace kernels {

/// Z[n x out] = X[n x in] * W^T + b, with W stored [out x in] row-major.
void linear_forward(const double* x, const double* w, const double* b, int n,
                    int in, int out, double* z);

/// dX[n x in] = dZ[n x out] * W
void linear_grad_input(const double* dz, const double* w, int n, int in,
                       int out, double* dx);

/// dW[out x in] = dZ^T * X, dB[out] = column sums of dZ. Overwrites the
/// outputs unless `accumulate`, in which case it adds to them (used by the
/// trainer to fold the gradient straight into the momentum buffer).
void linear_grad_params(const double* dz, const double* x, int n, int in,
                        int out, double* dw, double* db,
                        bool accumulate = false);

/// Per-feature batch mean and biased variance of Z[n x f].
void batch_mean_var(const double* z, int n, int f, double* mean, double* var);

/// out = gamma * (z - mean) / sqrt(var + eps) + beta.
/// When xhat / inv_std are non-null they receive the normalized activations
/// and 1/sqrt(var + eps) for the backward pass.
void bn_forward(const double* z, int n, int f, const double* mean,
                const double* var, double eps, const double* gamma,
                const double* beta, double* out, double* xhat,
                double* inv_std);

/// Backward through train-mode batch norm (batch statistics participate in
/// the gradient). dgamma/dbeta are overwritten (or added to, when
/// `accumulate`); dz may alias dout.
void bn_backward(const double* dout, const double* xhat,
                 const double* inv_std, int n, int f, const double* gamma,
                 double* dz, double* dgamma, double* dbeta,
                 bool accumulate = false);

void activation_forward(Activation act, const double* z, std::size_t m,
                        double* a);

/// dz = dout * act'(z); `a` holds the forward outputs (used for tanh).
void activation_backward(Activation act, const double* dout, const double* z,
                         const double* a, std::size_t m, double* dz);

/// Row softmax via log-sum-exp into probs[n x k]; returns the mean
/// cross-entropy against integer labels. When dlogits is non-null it
/// receives (probs - onehot) / n.
double softmax_xent(const double* logits, const int* labels, int n, int k,
                    double* probs, double* dlogits);

/// Row softmax only (log-sum-exp shifted).
void softmax_rows(const double* logits, int n, int k, double* probs);

}  // namespace kernels

/// Serial reference implementations with the same contracts and accumulation
/// order as swa::kernels. Kept for testing and for the kernel benchmark.
namespace ref {

void linear_forward(const double* x, const double* w, const double* b, int n,
                    int in, int out, double* z);
void linear_grad_input(const double* dz, const double* w, int n, int in,
                       int out, double* dx);
void linear_grad_params(const double* dz, const double* x, int n, int in,
                        int out, double* dw, double* db,
                        bool accumulate = false);
void batch_mean_var(const double* z, int n, int f, double* mean, double* var);
void bn_forward(const double* z, int n, int f, const double* mean,
                const double* var, double eps, const double* gamma,
                const double* beta, double* out, double* xhat,
                double* inv_std);
void bn_backward(const double* dout, const double* xhat,
                 const double* inv_std, int n, int f, const double* gamma,
                 double* dz, double* dgamma, double* dbeta,
                 bool accumulate = false);

}  // namespace ref

}  // namespace swa
