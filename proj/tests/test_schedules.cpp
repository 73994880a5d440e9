#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "swa/errors.hpp"
#include "swa/schedules.hpp"

using namespace swa;

namespace {

// Independent one-line closed form for the cyclic schedule.
double cyclic_oracle(double a1, double a2, std::int64_t c, std::int64_t i) {
  const double t = static_cast<double>((i - 1) % c + 1) / static_cast<double>(c);
  return (1.0 - t) * a1 + t * a2;
}

}  // namespace

TEST_CASE("cyclic: end of cycle forces alpha2, start matches the closed form") {
  const LrSchedule s = CyclicLinear{0.1, 0.001, 5};
  CHECK(lr_at(s, 5) == 0.001);
  CHECK(lr_at(s, 10) == 0.001);
  // t(1) = 0.2 -> 0.0802
  CHECK(lr_at(s, 1) == doctest::Approx(0.0802).epsilon(1e-15));
  CHECK(lr_at(s, 1) == cyclic_oracle(0.1, 0.001, 5, 1));
  // Period-c repetition.
  CHECK(lr_at(s, 6) == lr_at(s, 1));
  CHECK(lr_at(s, 6) == cyclic_oracle(0.1, 0.001, 5, 6));
}

TEST_CASE("cyclic: exact agreement with the oracle over a parameter table") {
  const double alphas[][2] = {{0.1, 0.001}, {0.05, 0.0005}, {1.0, 1.0}, {0.3, 0.2}};
  for (const auto& a : alphas)
    for (std::int64_t c : {1, 2, 5, 7, 100})
      for (std::int64_t i = 1; i <= 3 * c + 1; ++i) {
        const LrSchedule s = CyclicLinear{a[0], a[1], c};
        CHECK(lr_at(s, i) == cyclic_oracle(a[0], a[1], c, i));
      }
}

TEST_CASE("cyclic: min over a period is alpha2 exactly at capture points") {
  const double a1 = 0.1, a2 = 0.001;
  const std::int64_t c = 5;
  const LrSchedule s = CyclicLinear{a1, a2, c};
  for (std::int64_t i = 1; i <= 10 * c; ++i) {
    const bool at_min = lr_at(s, i) == a2;
    CHECK(at_min == is_capture_point(i, c));
    CHECK(lr_at(s, i) <= (1.0 - 1.0 / c) * a1 + (1.0 / c) * a2 + 1e-18);
    CHECK(lr_at(s, i) >= a2);
  }
  // The maximum is attained at the first iteration of each cycle.
  CHECK(lr_at(s, 1) == (1.0 - 1.0 / c) * a1 + (1.0 / c) * a2);
}

TEST_CASE("constant schedule returns alpha1 everywhere") {
  const LrSchedule s = Constant{0.05};
  CHECK(lr_at(s, 1) == 0.05);
  CHECK(lr_at(s, 123456) == 0.05);
}

TEST_CASE("piecewise decay: plateau, ramp, floor") {
  const LrSchedule s = PiecewiseDecay{0.1, 100};
  // Epoch 95 of budget 100 sits on the 0.01*alpha1 floor.
  CHECK(lr_at(s, 95) == doctest::Approx(0.001).epsilon(1e-15));
  CHECK(lr_at(s, 1) == 0.1);
  CHECK(lr_at(s, 50) == 0.1);  // f = 49/100 < 0.5
  // Non-increasing over the whole budget and beyond.
  double prev = lr_at(s, 1);
  for (std::int64_t i = 2; i <= 120; ++i) {
    const double cur = lr_at(s, i);
    CHECK(cur <= prev);
    CHECK(cur > 0.0);
    CHECK(cur <= 0.1);
    prev = cur;
  }
  // Midpoint of the ramp: f = 0.7 -> halfway between alpha1 and 0.01*alpha1.
  const LrSchedule s2 = PiecewiseDecay{0.1, 10};
  CHECK(lr_at(s2, 8) == doctest::Approx(0.5 * (0.1 + 0.001)).epsilon(1e-12));
}

TEST_CASE("cosine segment reproduces the replayed annealing tail") {
  // base 0.1, segment [1600, 1700) of period 1800, replayed every 100 epochs.
  const LrSchedule s = CosineSegment{0.1, 1600, 100, 1800};
  for (std::int64_t epoch : {0, 1, 37, 99, 100, 101}) {
    const double expect =
        0.1 * (1.0 + std::cos(std::numbers::pi * (1600.0 + epoch % 100) / 1800.0));
    CHECK(lr_at(s, epoch + 1, 1) == doctest::Approx(expect).epsilon(1e-15));
  }
  // iters_per_epoch folds iterations into epochs.
  CHECK(lr_at(s, 1, 50) == lr_at(s, 50, 50));
  CHECK(lr_at(s, 51, 50) == lr_at(s, 2, 1));
}

TEST_CASE("capture points are divisibility checks") {
  CHECK(is_capture_point(10, 5));
  CHECK_FALSE(is_capture_point(7, 5));
  CHECK(is_capture_point(1, 1));
  CHECK_THROWS_AS(is_capture_point(3, 0), DomainError);
}

TEST_CASE("domain errors: 1-based iterations and invalid parameters") {
  const LrSchedule s = CyclicLinear{0.1, 0.001, 5};
  CHECK_THROWS_AS(lr_at(s, 0), DomainError);
  CHECK_THROWS_AS(validate(LrSchedule{CyclicLinear{0.001, 0.1, 5}}), DomainError);
  CHECK_THROWS_AS(validate(LrSchedule{CyclicLinear{0.1, 0.001, 0}}), DomainError);
  CHECK_THROWS_AS(validate(LrSchedule{PiecewiseDecay{0.1, 0}}), DomainError);
  CHECK_NOTHROW(validate(LrSchedule{CyclicLinear{0.1, 0.1, 1}}));
}

TEST_CASE("all schedules stay within (0, alpha1]") {
  const std::vector<LrSchedule> schedules = {
      Constant{0.07}, CyclicLinear{0.07, 0.0007, 9}, PiecewiseDecay{0.07, 57},
      CosineSegment{0.035, 1600, 100, 1800}};  // cosine peak is 2*base
  for (const auto& s : schedules)
    for (std::int64_t i = 1; i <= 200; ++i) {
      const double lr = lr_at(s, i, 3);
      CHECK(lr > 0.0);
      CHECK(lr <= 0.07 + 1e-18);
    }
}
