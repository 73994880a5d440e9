#include "swa/gradcheck.hpp"

#include <cmath>
#include <random>

#include "swa/mlp.hpp"

namespace swa {

namespace {

Batch random_batch(int n, int dim, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Batch b;
  b.n = n;
  b.dim = dim;
  b.x.resize(static_cast<std::size_t>(n) * dim);
  b.y.resize(n);
  for (auto& v : b.x) v = gauss(rng);
  for (int i = 0; i < n; ++i) b.y[i] = i % classes;
  return b;
}

double check_case(const MlpSpec& spec, std::uint64_t seed, double h) {
  const MlpState state = init_state(spec, seed);
  const Batch batch = random_batch(8, spec.input_dim(), spec.output_dim(), seed + 1);
  ParamVector grad;
  ForwardCache cache;
  loss_and_grad(state, batch, grad, cache);
  const ParamVector fd = finite_diff_grad(state, batch, h);
  double worst = 0.0;
  for (std::size_t j = 0; j < grad.size(); ++j)
    worst = std::max(worst, std::abs(grad[j] - fd[j]) / (1.0 + std::abs(fd[j])));
  return worst;
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck(double h) {
  struct Variant {
    const char* name;
    MlpSpec spec;
    std::uint64_t seed;
  };
  const std::vector<Variant> variants = {
      {"relu_2-8-2", {{2, 8, 2}, Activation::relu, {false}, 0.0}, 11},
      {"relu_bn_2-8-2", {{2, 8, 2}, Activation::relu, {true}, 0.0}, 13},
      {"tanh_2-8-2", {{2, 8, 2}, Activation::tanh_fn, {false}, 0.05}, 17},
      {"tanh_bn_2-8-2", {{2, 8, 2}, Activation::tanh_fn, {true}, 0.05}, 19},
      {"relu_bn_3-16-8-3", {{3, 16, 8, 3}, Activation::relu, {true, true}, 0.01}, 23},
      {"tanh_3-16-8-3", {{3, 16, 8, 3}, Activation::tanh_fn, {false, false}, 0.0}, 29},
  };
  std::vector<GradCheckCase> out;
  for (const auto& v : variants)
    out.push_back({v.name, check_case(v.spec, v.seed, h)});
  return out;
}

}  // namespace swa
