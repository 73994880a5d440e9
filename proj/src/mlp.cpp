#include "swa/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "swa/errors.hpp"
#include "swa/finite_diff.hpp"

namespace swa {

void MlpSpec::validate() const {
  if (layer_dims.size() < 2)
    throw ShapeError("spec: layer_dims needs at least input and output");
  for (int d : layer_dims)
    if (d < 1) throw ShapeError("spec: all layer_dims must be >= 1");
  if (l2_coeff < 0.0) throw DomainError("spec: l2_coeff must be >= 0");
  if (!batchnorm.empty() && static_cast<int>(batchnorm.size()) != n_hidden())
    throw ShapeError("spec: batchnorm flags must match hidden layer count");
}

MlpLayout::MlpLayout(const MlpSpec& spec) {
  std::size_t off = 0;
  for (int l = 0; l < spec.n_layers(); ++l) {
    LayerOffsets lo;
    lo.in = spec.layer_dims[l];
    lo.out = spec.layer_dims[l + 1];
    lo.bn = spec.has_bn(l);
    lo.w = off;
    off += static_cast<std::size_t>(lo.out) * lo.in;
    lo.b = off;
    off += lo.out;
    if (lo.bn) {
      lo.gamma = off;
      off += lo.out;
      lo.beta = off;
      off += lo.out;
    }
    layers.push_back(lo);
  }
  total = off;
}

std::size_t MlpSpec::param_count() const { return MlpLayout(*this).total; }

MlpState init_state(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  const MlpLayout layout(spec);
  MlpState st;
  st.spec = spec;
  st.params.assign(layout.total, 0.0);
  std::mt19937_64 rng(seed);
  for (const auto& lo : layout.layers) {
    const double lim = std::sqrt(6.0 / (lo.in + lo.out));
    std::uniform_real_distribution<double> unif(-lim, lim);
    double* w = st.params.data() + lo.w;
    for (std::size_t i = 0; i < static_cast<std::size_t>(lo.in) * lo.out; ++i)
      w[i] = unif(rng);
    if (lo.bn)
      std::fill_n(st.params.data() + lo.gamma, lo.out, 1.0);
  }
  st.bn.resize(spec.n_hidden());
  for (int l = 0; l < spec.n_hidden(); ++l) {
    if (spec.has_bn(l)) {
      st.bn[l].mean.assign(spec.layer_dims[l + 1], 0.0);
      st.bn[l].var.assign(spec.layer_dims[l + 1], 1.0);
    }
  }
  return st;
}

namespace {

void check_finite(const Matrix& m, int layer, const char* what) {
  for (double v : m.v)
    if (!std::isfinite(v))
      throw NumericError(std::string("nonfinite ") + what + " in layer " +
                         std::to_string(layer));
}

void ensure_cache(ForwardCache& c, const MlpSpec& spec, int n) {
  const int L = spec.n_layers();
  c.z.resize(L);
  c.h.resize(L);
  c.a.resize(L);
  c.xhat.resize(L);
  c.inv_std.resize(L);
  c.mean.resize(L);
  c.var.resize(L);
  for (int l = 0; l < L; ++l) {
    const int out = spec.layer_dims[l + 1];
    c.z[l].resize(n, out);
    if (l < L - 1) {
      c.h[l].resize(n, out);
      c.a[l].resize(n, out);
    }
    if (spec.has_bn(l)) {
      c.xhat[l].resize(n, out);
      c.inv_std[l].resize(out);
      c.mean[l].resize(out);
      c.var[l].resize(out);
    }
  }
  c.logits.resize(n, spec.layer_dims[L]);
  c.probs.resize(n, spec.layer_dims[L]);
}

}  // namespace

const Matrix& forward(const MlpState& state, const Batch& batch, Mode mode,
                      ForwardCache& cache) {
  const MlpSpec& spec = state.spec;
  spec.validate();
  if (batch.dim != spec.input_dim())
    throw ShapeError("forward: batch dim " + std::to_string(batch.dim) +
                     " != input dim " + std::to_string(spec.input_dim()));
  if (batch.n < 1) throw ShapeError("forward: empty batch");
  if (state.params.size() != spec.param_count())
    throw ShapeError("forward: param vector length mismatch");
  const MlpLayout layout(spec);
  const int n = batch.n;
  const int L = spec.n_layers();
  ensure_cache(cache, spec, n);

  const double* input = batch.x.data();
  for (int l = 0; l < L; ++l) {
    const auto& lo = layout.layers[l];
    kernels::linear_forward(input, state.params.data() + lo.w,
                            state.params.data() + lo.b, n, lo.in, lo.out,
                            cache.z[l].v.data());
    check_finite(cache.z[l], l, "activation");
    if (l == L - 1) break;  // logits layer: no BN, no activation
    const Matrix* act_in = &cache.z[l];
    if (lo.bn) {
      const double* mean;
      const double* var;
      if (mode == Mode::train) {
        kernels::batch_mean_var(cache.z[l].v.data(), n, lo.out,
                                cache.mean[l].data(), cache.var[l].data());
        mean = cache.mean[l].data();
        var = cache.var[l].data();
      } else {
        if (state.bn[l].mean.empty())
          throw ShapeError("forward: missing BN stats for layer " + std::to_string(l));
        mean = state.bn[l].mean.data();
        var = state.bn[l].var.data();
      }
      kernels::bn_forward(cache.z[l].v.data(), n, lo.out, mean, var,
                          kBnEpsilon, state.params.data() + lo.gamma,
                          state.params.data() + lo.beta, cache.h[l].v.data(),
                          cache.xhat[l].v.data(), cache.inv_std[l].data());
      act_in = &cache.h[l];
    } else {
      cache.h[l].v = cache.z[l].v;
    }
    kernels::activation_forward(spec.activation, act_in->v.data(),
                                act_in->v.size(), cache.a[l].v.data());
    input = cache.a[l].v.data();
  }
  cache.logits = cache.z[L - 1];
  return cache.logits;
}

double l2_penalty(const MlpSpec& spec, const ParamVector& params) {
  if (spec.l2_coeff == 0.0) return 0.0;
  const MlpLayout layout(spec);
  double s = 0.0;
  for (const auto& lo : layout.layers) {
    const double* w = params.data() + lo.w;
    for (std::size_t i = 0; i < static_cast<std::size_t>(lo.in) * lo.out; ++i)
      s += w[i] * w[i];
  }
  return 0.5 * spec.l2_coeff * s;
}

double loss_and_grad(const MlpState& state, const Batch& batch,
                     ParamVector& grad, ForwardCache& cache, bool accumulate) {
  const MlpSpec& spec = state.spec;
  forward(state, batch, Mode::train, cache);
  const MlpLayout layout(spec);
  const int n = batch.n;
  const int L = spec.n_layers();
  grad.resize(layout.total);

  cache.dbuf1.resize(n, spec.output_dim());
  double loss = kernels::softmax_xent(cache.logits.v.data(), batch.y.data(), n,
                                      spec.output_dim(), cache.probs.v.data(),
                                      cache.dbuf1.v.data());
  loss += l2_penalty(spec, state.params);

  // cache.dbuf1 holds d(loss)/d(current layer output); dbuf2 is scratch for
  // the gradient w.r.t. the layer below.
  for (int l = L - 1; l >= 0; --l) {
    const auto& lo = layout.layers[l];
    const double* layer_input =
        (l == 0) ? batch.x.data() : cache.a[l - 1].v.data();
    // dbuf1 currently holds dL/dz[l] (post-activation/BN backward already
    // applied for layers above).
    kernels::linear_grad_params(cache.dbuf1.v.data(), layer_input, n, lo.in,
                                lo.out, grad.data() + lo.w, grad.data() + lo.b,
                                accumulate);
    if (l > 0) {
      cache.dbuf2.resize(n, lo.in);
      kernels::linear_grad_input(cache.dbuf1.v.data(),
                                 state.params.data() + lo.w, n, lo.in, lo.out,
                                 cache.dbuf2.v.data());
      // Through the activation of layer l-1.
      const auto& plo = layout.layers[l - 1];
      cache.dbuf1.resize(n, plo.out);
      kernels::activation_backward(spec.activation, cache.dbuf2.v.data(),
                                   cache.h[l - 1].v.data(),
                                   cache.a[l - 1].v.data(),
                                   cache.a[l - 1].v.size(),
                                   cache.dbuf1.v.data());
      if (plo.bn) {
        kernels::bn_backward(cache.dbuf1.v.data(), cache.xhat[l - 1].v.data(),
                             cache.inv_std[l - 1].data(), n, plo.out,
                             state.params.data() + plo.gamma,
                             cache.dbuf1.v.data(), grad.data() + plo.gamma,
                             grad.data() + plo.beta, accumulate);
      }
    }
  }

  if (spec.l2_coeff != 0.0) {
    for (const auto& lo : layout.layers) {
      const double* w = state.params.data() + lo.w;
      double* gw = grad.data() + lo.w;
      for (std::size_t i = 0; i < static_cast<std::size_t>(lo.in) * lo.out; ++i)
        gw[i] += spec.l2_coeff * w[i];
    }
  }
  return loss;
}

double loss_value(const MlpState& state, const Batch& batch, Mode mode,
                  ForwardCache& cache) {
  forward(state, batch, mode, cache);
  const double ce = kernels::softmax_xent(cache.logits.v.data(),
                                          batch.y.data(), batch.n,
                                          state.spec.output_dim(),
                                          cache.probs.v.data(), nullptr);
  return ce + l2_penalty(state.spec, state.params);
}

ParamVector finite_diff_grad(const MlpState& state, const Batch& batch,
                             double h) {
  if (h <= 0.0) throw DomainError("finite_diff_grad: h must be > 0");
  MlpState probe = state;
  ForwardCache cache;
  auto loss = [&]() { return loss_value(probe, batch, Mode::train, cache); };
  const std::vector<double> g = central_diff(loss, probe.params.values(), h);
  ParamVector out(g.size());
  std::copy(g.begin(), g.end(), out.begin());
  return out;
}

BnRecomputeResult recompute_bn_stats(const MlpState& state,
                                     const std::vector<Batch>& stream) {
  if (stream.empty())
    throw DomainError("recompute_bn_stats: need at least one batch");
  const MlpSpec& spec = state.spec;
  const int H = spec.n_hidden();

  struct Agg {
    std::vector<double> mean, m2;
    double count = 0.0;
  };
  std::vector<Agg> agg(H);
  for (int l = 0; l < H; ++l) {
    if (spec.has_bn(l)) {
      agg[l].mean.assign(spec.layer_dims[l + 1], 0.0);
      agg[l].m2.assign(spec.layer_dims[l + 1], 0.0);
    }
  }

  ForwardCache cache;
  std::vector<double> bmean, bvar;
  for (const Batch& b : stream) {
    forward(state, b, Mode::train, cache);
    for (int l = 0; l < H; ++l) {
      if (!spec.has_bn(l)) continue;
      const int f = spec.layer_dims[l + 1];
      // Train-mode forward already computed this layer's batch stats.
      const double nb = static_cast<double>(b.n);
      Agg& a = agg[l];
      for (int j = 0; j < f; ++j) {
        const double mb = cache.mean[l][j];
        const double m2b = cache.var[l][j] * nb;  // biased var * n
        const double delta = mb - a.mean[j];
        const double nnew = a.count + nb;
        a.mean[j] += delta * nb / nnew;
        a.m2[j] += m2b + delta * delta * a.count * nb / nnew;
      }
      a.count += nb;
    }
  }

  BnRecomputeResult res;
  res.state = state;
  for (int l = 0; l < H; ++l) {
    if (!spec.has_bn(l)) continue;
    const int f = spec.layer_dims[l + 1];
    res.state.bn[l].mean = agg[l].mean;
    res.state.bn[l].var.resize(f);
    for (int j = 0; j < f; ++j) {
      double v = agg[l].m2[j] / agg[l].count;
      if (v < kBnEpsilon) {
        v = kBnEpsilon;
        ++res.clamped;
      }
      res.state.bn[l].var[j] = v;
    }
  }
  return res;
}

BnRecomputeResult recompute_bn_stats(const MlpState& state, const Dataset& data,
                                     int batch_size) {
  std::vector<Batch> stream;
  std::vector<int> idx(data.n);
  for (int i = 0; i < data.n; ++i) idx[i] = i;
  for (int first = 0; first < data.n; first += batch_size) {
    const int count = std::min(batch_size, data.n - first);
    Batch b;
    data.gather(idx, first, count, b);
    stream.push_back(std::move(b));
  }
  return recompute_bn_stats(state, stream);
}

std::vector<int> argmax_labels(const Matrix& probs) {
  std::vector<int> labels(probs.rows);
  for (int i = 0; i < probs.rows; ++i) {
    const double* p = probs.row(i);
    int best = 0;
    for (int j = 1; j < probs.cols; ++j)
      if (p[j] > p[best]) best = j;
    labels[i] = best;
  }
  return labels;
}

EvalMetrics evaluate(const MlpState& state, const Dataset& data,
                     int batch_size) {
  if (data.n < 1) throw DomainError("evaluate: empty dataset");
  ForwardCache cache;
  std::vector<int> idx(data.n);
  for (int i = 0; i < data.n; ++i) idx[i] = i;
  Batch b;
  double ce_sum = 0.0;
  long wrong = 0;
  for (int first = 0; first < data.n; first += batch_size) {
    const int count = std::min(batch_size, data.n - first);
    data.gather(idx, first, count, b);
    forward(state, b, Mode::eval, cache);
    kernels::softmax_rows(cache.logits.v.data(), count,
                          state.spec.output_dim(), cache.probs.v.data());
    for (int i = 0; i < count; ++i) {
      const double* p = cache.probs.row(i);
      ce_sum -= std::log(std::max(p[b.y[i]], 1e-300));
      int best = 0;
      for (int j = 1; j < state.spec.output_dim(); ++j)
        if (p[j] > p[best]) best = j;
      if (best != b.y[i]) ++wrong;
    }
  }
  EvalMetrics m;
  m.loss = ce_sum / data.n + l2_penalty(state.spec, state.params);
  m.error = static_cast<double>(wrong) / data.n;
  return m;
}

Matrix predict_proba(const MlpState& state, const Batch& batch) {
  ForwardCache cache;
  forward(state, batch, Mode::eval, cache);
  Matrix probs;
  probs.resize(batch.n, state.spec.output_dim());
  kernels::softmax_rows(cache.logits.v.data(), batch.n,
                        state.spec.output_dim(), probs.v.data());
  return probs;
}

std::vector<LayerParams> unflatten(const MlpSpec& spec, const ParamVector& pv) {
  const MlpLayout layout(spec);
  if (pv.size() != layout.total)
    throw ShapeError("unflatten: length mismatch");
  std::vector<LayerParams> out;
  for (const auto& lo : layout.layers) {
    LayerParams lp;
    lp.w.resize(lo.out, lo.in);
    std::copy_n(pv.data() + lo.w, static_cast<std::size_t>(lo.out) * lo.in,
                lp.w.v.begin());
    lp.b.assign(pv.data() + lo.b, pv.data() + lo.b + lo.out);
    if (lo.bn) {
      lp.gamma.assign(pv.data() + lo.gamma, pv.data() + lo.gamma + lo.out);
      lp.beta.assign(pv.data() + lo.beta, pv.data() + lo.beta + lo.out);
    }
    out.push_back(std::move(lp));
  }
  return out;
}

ParamVector flatten(const MlpSpec& spec, const std::vector<LayerParams>& layers) {
  const MlpLayout layout(spec);
  if (layers.size() != layout.layers.size())
    throw ShapeError("flatten: layer count mismatch");
  ParamVector pv(layout.total);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& lo = layout.layers[l];
    const auto& lp = layers[l];
    std::copy(lp.w.v.begin(), lp.w.v.end(), pv.data() + lo.w);
    std::copy(lp.b.begin(), lp.b.end(), pv.data() + lo.b);
    if (lo.bn) {
      std::copy(lp.gamma.begin(), lp.gamma.end(), pv.data() + lo.gamma);
      std::copy(lp.beta.begin(), lp.beta.end(), pv.data() + lo.beta);
    }
  }
  return pv;
}

}  // namespace swa
