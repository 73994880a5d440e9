#pragma once

#include <cstdint>
#include <string>
#include <variant>

namespace swa {

// Learning-rate schedules as pure functions of the 1-based iteration counter.

struct Constant {
  double alpha1;
};

/// Linear decay from alpha1 to alpha2 within each cycle of c iterations,
/// jumping straight back to the high rate at the cycle boundary.
struct CyclicLinear {
  double alpha1;
  double alpha2;
  std::int64_t cycle;  // c >= 1
};

/// Cosine-annealing segment replayed with period `seg_len` epochs:
/// base * (1 + cos(pi * (seg_start + epoch mod seg_len) / period)).
/// epoch(i) is derived from the caller's iterations-per-epoch.
struct CosineSegment {
  double base;
  std::int64_t seg_start;
  std::int64_t seg_len;
  std::int64_t period;
};

/// Conventional decay over a fixed budget: alpha1 for the first half,
/// linear decay to 0.01*alpha1 over [0.5B, 0.9B), then flat.
struct PiecewiseDecay {
  double alpha1;
  std::int64_t budget_iters;
};

using LrSchedule = std::variant<Constant, CyclicLinear, CosineSegment, PiecewiseDecay>;

/// Validates the schedule parameters; throws DomainError on violations
/// (alpha1 >= alpha2 > 0, cycle >= 1, budget >= 1, ...).
void validate(const LrSchedule& s);

/// Learning rate at iteration i (1-based). `iters_per_epoch` is only
/// consulted by CosineSegment, whose formula runs on epochs.
double lr_at(const LrSchedule& s, std::int64_t i, std::int64_t iters_per_epoch = 1);

/// True iff i is a capture point: mod(i, capture_every) = 0. For
/// CyclicLinear callers set capture_every = c so captures coincide with the
/// alpha2 trough; for Constant the convention is once per epoch.
bool is_capture_point(std::int64_t i, std::int64_t capture_every);

std::string describe(const LrSchedule& s);

}  // namespace swa
