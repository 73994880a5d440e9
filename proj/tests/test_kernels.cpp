#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "swa/kernels.hpp"

using namespace swa;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = gauss(rng);
  return v;
}

}  // namespace

TEST_CASE("linear_forward matches a hand-computed case") {
  // 2x2 batch, W = [[1,2],[3,4]], b = (10, 20), X = [[1,1],[2,-1]]
  const std::vector<double> w = {1, 2, 3, 4};
  const std::vector<double> b = {10, 20};
  const std::vector<double> x = {1, 1, 2, -1};
  std::vector<double> z(4);
  kernels::linear_forward(x.data(), w.data(), b.data(), 2, 2, 2, z.data());
  CHECK(z[0] == 13.0);  // 10 + 1 + 2
  CHECK(z[1] == 27.0);  // 20 + 3 + 4
  CHECK(z[2] == 10.0);  // 10 + 2 - 2
  CHECK(z[3] == 22.0);  // 20 + 6 - 4
}

TEST_CASE("omp kernels are bit-identical to the serial reference") {
  const int n = 37, in = 19, out = 23;
  const auto x = random_vec(std::size_t(n) * in, 1);
  const auto w = random_vec(std::size_t(out) * in, 2);
  const auto b = random_vec(out, 3);
  const auto dz = random_vec(std::size_t(n) * out, 4);

  std::vector<double> a1(std::size_t(n) * out), a2(a1.size());
  kernels::linear_forward(x.data(), w.data(), b.data(), n, in, out, a1.data());
  ref::linear_forward(x.data(), w.data(), b.data(), n, in, out, a2.data());
  CHECK(a1 == a2);

  std::vector<double> d1(std::size_t(n) * in), d2(d1.size());
  kernels::linear_grad_input(dz.data(), w.data(), n, in, out, d1.data());
  ref::linear_grad_input(dz.data(), w.data(), n, in, out, d2.data());
  CHECK(d1 == d2);

  std::vector<double> dw1(std::size_t(out) * in), dw2(dw1.size()), db1(out), db2(out);
  kernels::linear_grad_params(dz.data(), x.data(), n, in, out, dw1.data(), db1.data());
  ref::linear_grad_params(dz.data(), x.data(), n, in, out, dw2.data(), db2.data());
  CHECK(dw1 == dw2);
  CHECK(db1 == db2);

  std::vector<double> m1(out), v1(out), m2(out), v2(out);
  kernels::batch_mean_var(dz.data(), n, out, m1.data(), v1.data());
  ref::batch_mean_var(dz.data(), n, out, m2.data(), v2.data());
  CHECK(m1 == m2);
  CHECK(v1 == v2);

  const auto gamma = random_vec(out, 5);
  const auto beta = random_vec(out, 6);
  std::vector<double> o1(dz.size()), o2(dz.size()), xh1(dz.size()), xh2(dz.size());
  std::vector<double> is1(out), is2(out);
  kernels::bn_forward(dz.data(), n, out, m1.data(), v1.data(), 1e-5,
                      gamma.data(), beta.data(), o1.data(), xh1.data(), is1.data());
  ref::bn_forward(dz.data(), n, out, m2.data(), v2.data(), 1e-5, gamma.data(),
                  beta.data(), o2.data(), xh2.data(), is2.data());
  CHECK(o1 == o2);

  std::vector<double> bz1(dz.size()), bz2(dz.size()), dg1(out), dg2(out),
      dbt1(out), dbt2(out);
  kernels::bn_backward(o1.data(), xh1.data(), is1.data(), n, out, gamma.data(),
                       bz1.data(), dg1.data(), dbt1.data());
  ref::bn_backward(o2.data(), xh2.data(), is2.data(), n, out, gamma.data(),
                   bz2.data(), dg2.data(), dbt2.data());
  CHECK(bz1 == bz2);
  CHECK(dg1 == dg2);
  CHECK(dbt1 == dbt2);
}

TEST_CASE("batch_mean_var uses the biased variance") {
  // Single feature fed {1, 3}: mean 2, biased variance 1.
  const std::vector<double> z = {1.0, 3.0};
  double mean, var;
  kernels::batch_mean_var(z.data(), 2, 1, &mean, &var);
  CHECK(mean == 2.0);
  CHECK(var == 1.0);
}

TEST_CASE("softmax rows sum to one and handle large logits") {
  const std::vector<double> logits = {1000.0, 999.0, -1000.0, 0.0, 0.0, 0.0};
  std::vector<double> probs(6);
  const std::vector<int> labels = {0, 1};
  const double loss =
      kernels::softmax_xent(logits.data(), labels.data(), 2, 3, probs.data(), nullptr);
  CHECK(std::isfinite(loss));
  for (int i = 0; i < 2; ++i) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += probs[3 * i + j];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("grad-param accumulation adds instead of overwriting") {
  const int n = 4, in = 3, out = 2;
  const auto x = random_vec(std::size_t(n) * in, 7);
  const auto dz = random_vec(std::size_t(n) * out, 8);
  std::vector<double> dw(std::size_t(out) * in, 1.0), db(out, 1.0);
  std::vector<double> dw0(dw.size()), db0(out);
  kernels::linear_grad_params(dz.data(), x.data(), n, in, out, dw0.data(), db0.data());
  kernels::linear_grad_params(dz.data(), x.data(), n, in, out, dw.data(), db.data(),
                              /*accumulate=*/true);
  for (std::size_t i = 0; i < dw.size(); ++i)
    CHECK(dw[i] == doctest::Approx(1.0 + dw0[i]).epsilon(1e-15));
  for (int i = 0; i < out; ++i)
    CHECK(db[i] == doctest::Approx(1.0 + db0[i]).epsilon(1e-15));
}
