#pragma once

#include <vector>

#include "swa/dataset.hpp"
#include "swa/mlp.hpp"
#include "swa/param_vector.hpp"

namespace swa {

/// Snapshots w_i sharing one MlpSpec, their mean (the weight-space average)
/// and the residuals delta_i = w_i - center, which sum to zero.
struct SnapshotSet {
  std::vector<ParamVector> models;
  ParamVector center;
  std::vector<ParamVector> deltas;

  static SnapshotSet from_models(std::vector<ParamVector> models);
};

struct PredictionGap {
  double ens_vs_center = 0.0;                 // || mean_i f(w_i) - f(center) ||
  std::vector<double> consecutive_gaps;       // || f(w_i) - f(w_{i+1}) ||
  std::vector<double> consecutive_agreements; // label agreement per pair
  double center_agreement = 0.0;              // center vs ensemble labels
};

/// States for a list of snapshots with freshly recomputed BN statistics over
/// `bn_data` (snapshots are captured mid-training without usable stats).
std::vector<MlpState> prepare_snapshot_states(const MlpSpec& spec,
                                              const std::vector<ParamVector>& models,
                                              const Dataset& bn_data);

/// Arithmetic mean of the per-model class probabilities (model-space
/// ensembling); each state must already carry fresh BN stats. Rows sum to 1.
Matrix ensemble_predict(const std::vector<MlpState>& models, const Batch& batch);

/// Prediction-space distances over `eval_data`: per-example L2 norms of
/// class-probability differences, averaged over the dataset, plus label
/// agreement fractions. Needs >= 2 snapshots.
PredictionGap gap_report(const MlpSpec& spec, const SnapshotSet& set,
                         const Dataset& bn_data, const Dataset& eval_data);

struct ScalingRow {
  double eps;
  double first_order_gap;   // mean pairwise prediction distance
  double second_order_gap;  // ensemble-vs-center prediction distance
};

/// Probes w_i = center + eps * delta_i for each eps. The directions must be
/// mean-centered (|| sum delta_i || <= 1e-8). On a twice-differentiable
/// activation the first-order gap scales ~eps and the second ~eps^2.
std::vector<ScalingRow> scaling_law_check(const MlpState& center,
                                          const std::vector<ParamVector>& directions,
                                          const std::vector<double>& eps_list,
                                          const Batch& batch);

/// Least-squares slope of log(y) against log(x); ignores nonpositive pairs.
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

/// Mean over examples of the L2 distance between probability rows.
double prediction_distance(const Matrix& a, const Matrix& b);

/// Fraction of rows where both matrices argmax to the same label.
double label_agreement(const Matrix& a, const Matrix& b);

}  // namespace swa
