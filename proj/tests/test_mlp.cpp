#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "swa/errors.hpp"
#include "swa/finite_diff.hpp"
#include "swa/gradcheck.hpp"
#include "swa/mlp.hpp"

using namespace swa;

namespace {

Batch make_batch(std::vector<double> x, std::vector<int> y, int dim) {
  Batch b;
  b.n = static_cast<int>(y.size());
  b.dim = dim;
  b.x = std::move(x);
  b.y = std::move(y);
  return b;
}

MlpState zero_state(const MlpSpec& spec) {
  MlpState st = init_state(spec, 1);
  std::fill(st.params.begin(), st.params.end(), 0.0);
  // keep gamma at 1 for BN layers
  const MlpLayout layout(spec);
  for (const auto& lo : layout.layers)
    if (lo.bn) std::fill_n(st.params.data() + lo.gamma, lo.out, 1.0);
  return st;
}

}  // namespace

TEST_CASE("forward: identity-sized linear net reproduces its input") {
  MlpSpec spec{{2, 2}, Activation::relu, {}, 0.0};
  MlpState st = zero_state(spec);
  auto layers = unflatten(spec, st.params);
  layers[0].w.at(0, 0) = 1.0;
  layers[0].w.at(1, 1) = 1.0;
  st.params = flatten(spec, layers);
  ForwardCache cache;
  const Batch b = make_batch({0.25, -2.5, 3.0, 4.0}, {0, 1}, 2);
  const Matrix& logits = forward(st, b, Mode::eval, cache);
  CHECK(logits.at(0, 0) == 0.25);
  CHECK(logits.at(0, 1) == -2.5);
  CHECK(logits.at(1, 0) == 3.0);
  CHECK(logits.at(1, 1) == 4.0);
}

TEST_CASE("forward: bias-only net maps (0,0) to the bias") {
  MlpSpec spec{{2, 2}, Activation::relu, {}, 0.0};
  MlpState st = zero_state(spec);
  auto layers = unflatten(spec, st.params);
  layers[0].w.at(0, 0) = 1.0;
  layers[0].w.at(1, 1) = 1.0;
  layers[0].b = {1.0, -1.0};
  st.params = flatten(spec, layers);
  ForwardCache cache;
  const Matrix& logits = forward(st, make_batch({0.0, 0.0}, {0}, 2), Mode::eval, cache);
  CHECK(logits.at(0, 0) == 1.0);
  CHECK(logits.at(0, 1) == -1.0);
}

TEST_CASE("forward: seeded 2-4-2 tanh net matches the scalar oracle") {
  MlpSpec spec{{2, 4, 2}, Activation::tanh_fn, {false}, 0.0};
  const MlpState st = init_state(spec, 5);
  ForwardCache cache;
  const Batch b = make_batch({0.3, -0.7}, {0}, 2);
  const Matrix& logits = forward(st, b, Mode::eval, cache);

  // Straight-line scalar evaluation, independent of the kernel path.
  const auto layers = unflatten(spec, st.params);
  double h[4];
  for (int o = 0; o < 4; ++o) {
    double acc = layers[0].b[o];
    for (int k = 0; k < 2; ++k) acc += layers[0].w.at(o, k) * b.x[k];
    h[o] = std::tanh(acc);
  }
  for (int o = 0; o < 2; ++o) {
    double acc = layers[1].b[o];
    for (int k = 0; k < 4; ++k) acc += layers[1].w.at(o, k) * h[k];
    CHECK(logits.at(0, o) == doctest::Approx(acc).epsilon(1e-14));
  }
  // Values frozen from the oracle above.
  CHECK(logits.at(0, 0) == doctest::Approx(0.25049488261703873).epsilon(1e-12));
  CHECK(logits.at(0, 1) == doctest::Approx(-0.56451752423806256).epsilon(1e-12));
}

TEST_CASE("forward errors: dimension mismatch and nonfinite activations") {
  MlpSpec spec{{2, 2}, Activation::relu, {}, 0.0};
  MlpState st = zero_state(spec);
  ForwardCache cache;
  CHECK_THROWS_AS(forward(st, make_batch({1.0}, {0}, 1), Mode::eval, cache),
                  ShapeError);
  std::fill(st.params.begin(), st.params.end(), 1e308);
  try {
    forward(st, make_batch({1e308, 1e308}, {0}, 2), Mode::eval, cache);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("loss: uniform softmax gives ln K and zero weights give ln 2") {
  MlpSpec spec{{3, 4}, Activation::relu, {}, 0.0};
  MlpState st = zero_state(spec);  // logits all zero -> uniform over 4 classes
  ForwardCache cache;
  const Batch b = make_batch({1, 2, 3, -1, 0, 1}, {2, 0}, 3);
  CHECK(loss_value(st, b, Mode::eval, cache) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));

  MlpSpec spec2{{2, 2}, Activation::relu, {}, 0.1};
  MlpState st2 = zero_state(spec2);
  ParamVector grad;
  const Batch b2 = make_batch({0.5, -0.5, 1.0, 2.0}, {0, 1}, 2);
  const double loss = loss_and_grad(st2, b2, grad, cache);
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  // L2 term contributes nothing to the gradient at zero weights.
  const MlpLayout layout(spec2);
  MlpSpec spec_nol2 = spec2;
  spec_nol2.l2_coeff = 0.0;
  MlpState st_nol2 = st2;
  st_nol2.spec = spec_nol2;
  ParamVector grad0;
  loss_and_grad(st_nol2, b2, grad0, cache);
  for (std::size_t i = 0; i < grad.size(); ++i) CHECK(grad[i] == grad0[i]);
}

TEST_CASE("loss: L2 penalty only increases the loss, equality at zero weights") {
  MlpSpec spec{{2, 8, 2}, Activation::tanh_fn, {false}, 0.3};
  const MlpState st = init_state(spec, 9);
  MlpState st0 = st;
  st0.spec.l2_coeff = 0.0;
  ForwardCache cache;
  const Batch b = make_batch({0.1, 0.2, -0.4, 0.9}, {0, 1}, 2);
  CHECK(loss_value(st, b, Mode::eval, cache) >
        loss_value(st0, b, Mode::eval, cache));

  MlpState z = zero_state(spec);
  MlpState z0 = z;
  z0.spec.l2_coeff = 0.0;
  CHECK(loss_value(z, b, Mode::eval, cache) ==
        loss_value(z0, b, Mode::eval, cache));
}

TEST_CASE("central_diff is exact on affine and quadratic functions") {
  std::vector<double> w = {2.0};
  std::span<double> ws(w);
  // L(w) = 3w: derivative 3 for any h.
  auto lin = [&] { return 3.0 * w[0]; };
  CHECK(central_diff(lin, ws, 0.37)[0] == doctest::Approx(3.0).epsilon(1e-14));
  // L(w) = w^2 at w=1: central difference is exact for quadratics.
  w[0] = 1.0;
  auto quad = [&] { return w[0] * w[0]; };
  CHECK(central_diff(quad, ws, 1e-3)[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(w[0] == 1.0);  // restored bit-exactly
}

TEST_CASE("gradient check matrix: analytic vs central differences < 1e-6") {
  for (const auto& c : run_gradcheck(1e-5)) {
    INFO(c.name);
    CHECK(c.max_rel_err < 1e-6);
  }
}

TEST_CASE("finite_diff_grad agrees with loss_and_grad on a BN net") {
  MlpSpec spec{{2, 6, 3}, Activation::tanh_fn, {true}, 0.02};
  const MlpState st = init_state(spec, 31);
  std::mt19937_64 rng(32);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Batch b;
  b.n = 6;
  b.dim = 2;
  b.x.resize(12);
  for (auto& v : b.x) v = gauss(rng);
  b.y = {0, 1, 2, 0, 1, 2};
  ParamVector grad;
  ForwardCache cache;
  loss_and_grad(st, b, grad, cache);
  const ParamVector fd = finite_diff_grad(st, b, 1e-5);
  double worst = 0.0;
  for (std::size_t j = 0; j < grad.size(); ++j)
    worst = std::max(worst, std::abs(grad[j] - fd[j]) / (1.0 + std::abs(fd[j])));
  CHECK(worst < 1e-6);
}

TEST_CASE("recompute_bn_stats: hand arithmetic, clamping, idempotence") {
  // 1->1 BN layer with identity affine: pre-normalization activations are
  // the raw inputs.
  MlpSpec spec{{1, 1, 2}, Activation::relu, {true}, 0.0};
  MlpState st = zero_state(spec);
  auto layers = unflatten(spec, st.params);
  layers[0].w.at(0, 0) = 1.0;
  st.params = flatten(spec, layers);

  SUBCASE("inputs {1,3} give mean 2, biased variance 1") {
    const Batch b = make_batch({1.0, 3.0}, {0, 1}, 1);
    const auto res = recompute_bn_stats(st, std::vector<Batch>{b});
    CHECK(res.state.bn[0].mean[0] == 2.0);
    CHECK(res.state.bn[0].var[0] == 1.0);
    CHECK(res.clamped == 0);
    // Params untouched.
    CHECK(res.state.params == st.params);
  }

  SUBCASE("constant stream clamps the variance and reports it") {
    const Batch b = make_batch({2.0, 2.0, 2.0}, {0, 1, 0}, 1);
    const auto res = recompute_bn_stats(st, std::vector<Batch>{b});
    CHECK(res.state.bn[0].mean[0] == 2.0);
    CHECK(res.state.bn[0].var[0] == kBnEpsilon);
    CHECK(res.clamped == 1);
  }

  SUBCASE("two passes over the same data are idempotent") {
    std::vector<Batch> stream = {make_batch({1.0, 3.0}, {0, 1}, 1),
                                 make_batch({-2.0, 5.0, 0.5}, {0, 1, 0}, 1)};
    const auto once = recompute_bn_stats(st, stream);
    const auto twice = recompute_bn_stats(once.state, stream);
    CHECK(once.state.bn[0].mean == twice.state.bn[0].mean);
    CHECK(once.state.bn[0].var == twice.state.bn[0].var);
  }

  SUBCASE("streaming aggregation matches a single concatenated batch") {
    std::vector<Batch> stream = {make_batch({1.0, 3.0}, {0, 1}, 1),
                                 make_batch({-2.0, 5.0, 0.5}, {0, 1, 0}, 1)};
    const Batch all = make_batch({1.0, 3.0, -2.0, 5.0, 0.5}, {0, 1, 0, 1, 0}, 1);
    const auto chunked = recompute_bn_stats(st, stream);
    const auto whole = recompute_bn_stats(st, std::vector<Batch>{all});
    CHECK(chunked.state.bn[0].mean[0] ==
          doctest::Approx(whole.state.bn[0].mean[0]).epsilon(1e-14));
    CHECK(chunked.state.bn[0].var[0] ==
          doctest::Approx(whole.state.bn[0].var[0]).epsilon(1e-14));
  }
}

TEST_CASE("parameter flatten/unflatten round-trips bit-exactly") {
  MlpSpec spec{{3, 5, 4, 2}, Activation::relu, {true, false}, 0.01};
  const MlpState st = init_state(spec, 77);
  const ParamVector back = flatten(spec, unflatten(spec, st.params));
  CHECK(back == st.params);
}

TEST_CASE("loss is invariant under batch permutation") {
  MlpSpec spec{{2, 8, 2}, Activation::tanh_fn, {true}, 0.01};
  const MlpState st = init_state(spec, 41);
  std::mt19937_64 rng(42);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Batch b;
  b.n = 16;
  b.dim = 2;
  b.x.resize(32);
  for (auto& v : b.x) v = gauss(rng);
  b.y.resize(16);
  for (int i = 0; i < 16; ++i) b.y[i] = i % 2;

  Batch rev;
  rev.n = b.n;
  rev.dim = b.dim;
  rev.x.resize(b.x.size());
  rev.y.resize(b.y.size());
  for (int i = 0; i < b.n; ++i) {
    rev.y[i] = b.y[b.n - 1 - i];
    std::copy_n(b.x.begin() + 2 * (b.n - 1 - i), 2, rev.x.begin() + 2 * i);
  }

  ForwardCache cache;
  // Eval mode: per-example losses are independent of order.
  CHECK(loss_value(st, b, Mode::eval, cache) ==
        doctest::Approx(loss_value(st, rev, Mode::eval, cache)).epsilon(1e-12));
  // Train mode: batch statistics are symmetric within the batch.
  const MlpState stats_st = recompute_bn_stats(st, std::vector<Batch>{b}).state;
  CHECK(loss_value(stats_st, b, Mode::train, cache) ==
        doctest::Approx(loss_value(stats_st, rev, Mode::train, cache)).epsilon(1e-12));
}

TEST_CASE("eval chunking does not change metrics") {
  MlpSpec spec{{2, 6, 2}, Activation::relu, {true}, 0.0};
  MlpState st = init_state(spec, 51);
  Dataset d;
  d.n = 50;
  d.dim = 2;
  d.classes = 2;
  std::mt19937_64 rng(52);
  std::normal_distribution<double> gauss(0.0, 1.0);
  d.x.resize(100);
  for (auto& v : d.x) v = gauss(rng);
  d.y.resize(50);
  for (int i = 0; i < 50; ++i) d.y[i] = i % 2;
  st = recompute_bn_stats(st, d).state;
  const EvalMetrics a = evaluate(st, d, 7);
  const EvalMetrics b = evaluate(st, d, 50);
  CHECK(a.error == b.error);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-13));
}
