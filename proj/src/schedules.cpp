#include "swa/schedules.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "swa/errors.hpp"

namespace swa {

void validate(const LrSchedule& s) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Constant>) {
          if (v.alpha1 <= 0.0) throw DomainError("schedule: alpha1 must be > 0");
        } else if constexpr (std::is_same_v<T, CyclicLinear>) {
          if (v.alpha2 <= 0.0 || v.alpha1 < v.alpha2)
            throw DomainError("schedule: need alpha1 >= alpha2 > 0");
          if (v.cycle < 1) throw DomainError("schedule: cycle length must be >= 1");
        } else if constexpr (std::is_same_v<T, CosineSegment>) {
          if (v.base <= 0.0) throw DomainError("schedule: base must be > 0");
          if (v.seg_len < 1 || v.period < 1)
            throw DomainError("schedule: seg_len and period must be >= 1");
        } else if constexpr (std::is_same_v<T, PiecewiseDecay>) {
          if (v.alpha1 <= 0.0) throw DomainError("schedule: alpha1 must be > 0");
          if (v.budget_iters < 1) throw DomainError("schedule: budget must be >= 1");
        }
      },
      s);
}

double lr_at(const LrSchedule& s, std::int64_t i, std::int64_t iters_per_epoch) {
  if (i < 1) throw DomainError("lr_at: iteration counter is 1-based");
  if (iters_per_epoch < 1) throw DomainError("lr_at: iters_per_epoch must be >= 1");
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return v.alpha1;
        } else if constexpr (std::is_same_v<T, CyclicLinear>) {
          const double t =
              static_cast<double>((i - 1) % v.cycle + 1) / static_cast<double>(v.cycle);
          return (1.0 - t) * v.alpha1 + t * v.alpha2;
        } else if constexpr (std::is_same_v<T, CosineSegment>) {
          const std::int64_t epoch = (i - 1) / iters_per_epoch;
          const double phase =
              static_cast<double>(v.seg_start + epoch % v.seg_len) /
              static_cast<double>(v.period);
          return v.base * (1.0 + std::cos(std::numbers::pi * phase));
        } else {
          static_assert(std::is_same_v<T, PiecewiseDecay>);
          const double f = static_cast<double>(i - 1) / static_cast<double>(v.budget_iters);
          if (f < 0.5) return v.alpha1;
          if (f >= 0.9) return 0.01 * v.alpha1;
          const double t = (f - 0.5) / 0.4;
          return (1.0 - t) * v.alpha1 + t * 0.01 * v.alpha1;
        }
      },
      s);
}

bool is_capture_point(std::int64_t i, std::int64_t capture_every) {
  if (capture_every < 1) throw DomainError("is_capture_point: capture_every must be >= 1");
  return i % capture_every == 0;
}

std::string describe(const LrSchedule& s) {
  std::ostringstream os;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Constant>) {
          os << "constant(alpha1=" << v.alpha1 << ")";
        } else if constexpr (std::is_same_v<T, CyclicLinear>) {
          os << "cyclic(alpha1=" << v.alpha1 << ", alpha2=" << v.alpha2
             << ", c=" << v.cycle << ")";
        } else if constexpr (std::is_same_v<T, CosineSegment>) {
          os << "cosine(base=" << v.base << ", seg_start=" << v.seg_start
             << ", seg_len=" << v.seg_len << ", period=" << v.period << ")";
        } else {
          os << "piecewise(alpha1=" << v.alpha1 << ", budget=" << v.budget_iters << ")";
        }
      },
      s);
  return os.str();
}

}  // namespace swa
