#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swa/dataset.hpp"
#include "swa/kernels.hpp"
#include "swa/param_vector.hpp"

namespace swa {

/// Epsilon added to the variance in batch-norm normalization; also the clamp
/// applied to degenerate (zero-variance) features during statistics passes.
constexpr double kBnEpsilon = 1e-5;

/// Architecture of a dense feed-forward classifier. The final layer emits
/// logits with no activation or batch norm; `batchnorm` carries one flag per
/// hidden layer.
struct MlpSpec {
  std::vector<int> layer_dims;  // input, hidden..., output
  Activation activation = Activation::relu;
  std::vector<bool> batchnorm;  // per hidden layer; empty = none
  double l2_coeff = 0.0;

  int n_layers() const { return static_cast<int>(layer_dims.size()) - 1; }
  int n_hidden() const { return n_layers() - 1; }
  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  bool has_bn(int layer) const {
    return layer < n_hidden() && layer < static_cast<int>(batchnorm.size()) &&
           batchnorm[layer];
  }
  void validate() const;  // throws on malformed specs
  std::size_t param_count() const;
  bool operator==(const MlpSpec&) const = default;
};

/// Offsets of one layer's parameters inside a ParamVector.
struct LayerOffsets {
  std::size_t w = 0, b = 0, gamma = 0, beta = 0;
  int in = 0, out = 0;
  bool bn = false;
};

struct MlpLayout {
  explicit MlpLayout(const MlpSpec& spec);
  std::vector<LayerOffsets> layers;
  std::size_t total = 0;
};

/// Batch-norm running statistics for one hidden layer (empty when the layer
/// has no batch norm). Not part of the ParamVector.
struct BnStats {
  std::vector<double> mean, var;
};

struct MlpState {
  MlpSpec spec;
  ParamVector params;
  std::vector<BnStats> bn;  // one entry per hidden layer
};

enum class Mode { train, eval };

struct Matrix {
  std::vector<double> v;
  int rows = 0, cols = 0;
  void resize(int r, int c) {
    rows = r;
    cols = c;
    v.resize(static_cast<std::size_t>(r) * c);
  }
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
};

/// Reusable per-layer activation record for forward/backward passes; opaque
/// to callers beyond `logits` and `probs`.
struct ForwardCache {
  std::vector<Matrix> z;       // post-affine, pre-BN
  std::vector<Matrix> h;       // activation input (post-BN when present)
  std::vector<Matrix> a;       // post-activation
  std::vector<Matrix> xhat;    // BN normalized activations (train mode)
  std::vector<std::vector<double>> inv_std, mean, var;
  Matrix logits;
  Matrix probs;
  Matrix dbuf1, dbuf2;  // backward scratch
};

/// Glorot-uniform weights, zero biases, gamma = 1, beta = 0; BN running
/// stats start at mean 0, var 1.
MlpState init_state(const MlpSpec& spec, std::uint64_t seed);

/// Forward pass. Train mode normalizes with batch statistics; eval mode with
/// the stored running statistics. Returns the logits held in `cache`.
/// Throws ShapeError on a dimension mismatch and NumericError (naming the
/// layer) on a nonfinite activation.
const Matrix& forward(const MlpState& state, const Batch& batch, Mode mode,
                      ForwardCache& cache);

/// Mean cross-entropy over the batch plus the L2 penalty (train-mode BN),
/// with the gradient written into `grad` in ParamVector layout. With
/// `accumulate` the gradient is added to `grad` instead, which lets the
/// trainer fold it directly into a pre-scaled momentum buffer.
double loss_and_grad(const MlpState& state, const Batch& batch,
                     ParamVector& grad, ForwardCache& cache,
                     bool accumulate = false);

/// Loss only (cross-entropy + L2), in the requested mode.
double loss_value(const MlpState& state, const Batch& batch, Mode mode,
                  ForwardCache& cache);

/// Central-difference gradient oracle with step h; BN batch statistics are
/// recomputed inside every perturbed evaluation.
ParamVector finite_diff_grad(const MlpState& state, const Batch& batch,
                             double h);

/// lambda/2 * sum of squared weight-matrix entries (biases and BN
/// parameters are not penalized).
double l2_penalty(const MlpSpec& spec, const ParamVector& params);

struct BnRecomputeResult {
  MlpState state;
  std::size_t clamped = 0;  // features whose variance hit the kBnEpsilon clamp
};

/// One exact streaming pass (count/mean/M2 aggregation) over the data:
/// each BN layer's running stats become the aggregated mean and biased
/// variance of its pre-normalization activations under the current params.
BnRecomputeResult recompute_bn_stats(const MlpState& state,
                                     const std::vector<Batch>& stream);
BnRecomputeResult recompute_bn_stats(const MlpState& state, const Dataset& data,
                                     int batch_size = 256);

struct EvalMetrics {
  double loss = 0.0;   // mean CE over the split + L2 penalty
  double error = 0.0;  // 1 - accuracy
};

/// Eval-mode metrics over a full dataset (chunked, deterministic order).
EvalMetrics evaluate(const MlpState& state, const Dataset& data,
                     int batch_size = 256);

/// Eval-mode class probabilities for a batch.
Matrix predict_proba(const MlpState& state, const Batch& batch);

/// Argmax label per row; ties break toward the lower class index.
std::vector<int> argmax_labels(const Matrix& probs);

// Structured <-> flat parameter round-trip.
struct LayerParams {
  Matrix w;
  std::vector<double> b, gamma, beta;
};
std::vector<LayerParams> unflatten(const MlpSpec& spec, const ParamVector& pv);
ParamVector flatten(const MlpSpec& spec, const std::vector<LayerParams>& layers);

}  // namespace swa
