#include "swa/ensemble.hpp"

#include <cmath>

#include "swa/errors.hpp"

namespace swa {

SnapshotSet SnapshotSet::from_models(std::vector<ParamVector> models) {
  if (models.empty()) throw DomainError("snapshot set: need at least one model");
  for (const auto& m : models)
    if (!m.same_layout(models.front()))
      throw ShapeError("snapshot set: inconsistent parameter layouts");
  SnapshotSet set;
  const std::size_t dim = models.front().size();
  set.center.assign(dim, 0.0);
  for (const auto& m : models) axpy(1.0, m.values(), set.center.values());
  scale(set.center.values(), 1.0 / static_cast<double>(models.size()));
  for (const auto& m : models) {
    ParamVector d(dim);
    for (std::size_t i = 0; i < dim; ++i) d[i] = m[i] - set.center[i];
    set.deltas.push_back(std::move(d));
  }
  set.models = std::move(models);
  return set;
}

std::vector<MlpState> prepare_snapshot_states(const MlpSpec& spec,
                                              const std::vector<ParamVector>& models,
                                              const Dataset& bn_data) {
  std::vector<MlpState> states(models.size());
  bool any_bn = false;
  for (int l = 0; l < spec.n_hidden(); ++l)
    if (spec.has_bn(l)) any_bn = true;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(models.size()); ++i) {
    MlpState st;
    st.spec = spec;
    st.params = models[i];
    st.bn.resize(spec.n_hidden());
    for (int l = 0; l < spec.n_hidden(); ++l) {
      if (spec.has_bn(l)) {
        st.bn[l].mean.assign(spec.layer_dims[l + 1], 0.0);
        st.bn[l].var.assign(spec.layer_dims[l + 1], 1.0);
      }
    }
    if (any_bn) st = recompute_bn_stats(st, bn_data).state;
    states[i] = std::move(st);
  }
  return states;
}

Matrix ensemble_predict(const std::vector<MlpState>& models, const Batch& batch) {
  if (models.empty()) throw DomainError("ensemble_predict: empty model set");
  const int k = models.front().spec.output_dim();
  Matrix mean;
  mean.resize(batch.n, k);
  std::fill(mean.v.begin(), mean.v.end(), 0.0);
  std::vector<Matrix> per_model(models.size());
#pragma omp parallel for schedule(dynamic)
  for (long m = 0; m < static_cast<long>(models.size()); ++m)
    per_model[m] = predict_proba(models[m], batch);
  // Deterministic ordered reduction into the mean.
  for (const Matrix& p : per_model)
    for (std::size_t i = 0; i < p.v.size(); ++i) mean.v[i] += p.v[i];
  const double inv = 1.0 / static_cast<double>(models.size());
  for (double& v : mean.v) v *= inv;
  return mean;
}

double prediction_distance(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw ShapeError("prediction_distance: shape mismatch");
  double total = 0.0;
  for (int i = 0; i < a.rows; ++i) {
    double sq = 0.0;
    for (int j = 0; j < a.cols; ++j) {
      const double d = a.at(i, j) - b.at(i, j);
      sq += d * d;
    }
    total += std::sqrt(sq);
  }
  return total / a.rows;
}

double label_agreement(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw ShapeError("label_agreement: shape mismatch");
  const auto la = argmax_labels(a);
  const auto lb = argmax_labels(b);
  long same = 0;
  for (int i = 0; i < a.rows; ++i)
    if (la[i] == lb[i]) ++same;
  return static_cast<double>(same) / a.rows;
}

PredictionGap gap_report(const MlpSpec& spec, const SnapshotSet& set,
                         const Dataset& bn_data, const Dataset& eval_data) {
  if (set.models.size() < 2)
    throw DomainError("gap_report: need at least two snapshots");
  auto states = prepare_snapshot_states(spec, set.models, bn_data);
  auto center_state = prepare_snapshot_states(spec, {set.center}, bn_data);

  const Batch eval_batch = eval_data.as_batch();
  const std::size_t m = states.size();
  std::vector<Matrix> probs(m);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(m); ++i)
    probs[i] = predict_proba(states[i], eval_batch);
  Matrix center_probs = predict_proba(center_state.front(), eval_batch);

  Matrix ens;
  ens.resize(eval_batch.n, spec.output_dim());
  std::fill(ens.v.begin(), ens.v.end(), 0.0);
  for (const Matrix& p : probs)
    for (std::size_t i = 0; i < p.v.size(); ++i) ens.v[i] += p.v[i];
  for (double& v : ens.v) v /= static_cast<double>(m);

  PredictionGap gap;
  gap.ens_vs_center = prediction_distance(ens, center_probs);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    gap.consecutive_gaps.push_back(prediction_distance(probs[i], probs[i + 1]));
    gap.consecutive_agreements.push_back(label_agreement(probs[i], probs[i + 1]));
  }
  gap.center_agreement = label_agreement(center_probs, ens);
  return gap;
}

std::vector<ScalingRow> scaling_law_check(const MlpState& center,
                                          const std::vector<ParamVector>& directions,
                                          const std::vector<double>& eps_list,
                                          const Batch& batch) {
  if (directions.size() < 2)
    throw DomainError("scaling_law_check: need at least two directions");
  const std::size_t dim = center.params.size();
  ParamVector sum(dim, 0.0);
  for (const auto& d : directions) {
    if (d.size() != dim) throw ShapeError("scaling_law_check: direction layout mismatch");
    axpy(1.0, d.values(), sum.values());
  }
  if (l2_norm(sum.values()) > 1e-8)
    throw DomainError("scaling_law_check: directions are not mean-centered");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (eps_list[i] < 0.0)
      throw DomainError("scaling_law_check: eps must be >= 0");
    if (i > 0 && eps_list[i] >= eps_list[i - 1])
      throw DomainError("scaling_law_check: eps_list must be strictly decreasing");
  }

  const Dataset bn_data = [&] {
    Dataset d;
    d.x = batch.x;
    d.y = batch.y;
    d.n = batch.n;
    d.dim = batch.dim;
    d.classes = center.spec.output_dim();
    return d;
  }();

  std::vector<ScalingRow> table;
  for (double eps : eps_list) {
    std::vector<ParamVector> models;
    for (const auto& delta : directions) {
      ParamVector w = center.params;
      axpy(eps, delta.values(), w.values());
      models.push_back(std::move(w));
    }
    auto states = prepare_snapshot_states(center.spec, models, bn_data);
    auto center_state = prepare_snapshot_states(center.spec, {center.params}, bn_data);
    std::vector<Matrix> probs(states.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(states.size()); ++i)
      probs[i] = predict_proba(states[i], batch);

    double pair_sum = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
      for (std::size_t j = i + 1; j < probs.size(); ++j) {
        pair_sum += prediction_distance(probs[i], probs[j]);
        ++pairs;
      }
    Matrix ens;
    ens.resize(batch.n, center.spec.output_dim());
    std::fill(ens.v.begin(), ens.v.end(), 0.0);
    for (const Matrix& p : probs)
      for (std::size_t i = 0; i < p.v.size(); ++i) ens.v[i] += p.v[i];
    for (double& v : ens.v) v /= static_cast<double>(probs.size());

    ScalingRow row;
    row.eps = eps;
    row.first_order_gap = pairs ? pair_sum / pairs : 0.0;
    row.second_order_gap =
        prediction_distance(ens, predict_proba(center_state.front(), batch));
    table.push_back(row);
  }
  return table;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long n = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] <= 0.0 || ys[i] <= 0.0) continue;
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw DomainError("loglog_slope: need at least two positive points");
  const double denom = n * sxx - sx * sx;
  return (n * sxy - sx * sy) / denom;
}

}  // namespace swa
