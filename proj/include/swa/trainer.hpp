#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "swa/dataset.hpp"
#include "swa/mlp.hpp"
#include "swa/param_vector.hpp"
#include "swa/schedules.hpp"

namespace swa {

struct TrainerConfig {
  LrSchedule schedule = Constant{0.05};
  double momentum = 0.9;        // in [0, 1)
  int batch_size = 64;
  std::int64_t iters = 1000;
  std::int64_t capture_every = 0;  // 0 = cycle length (cyclic) or iters/epoch
  std::uint64_t seed = 1;
  bool swa_enabled = true;
  bool log_snapshots = false;
  bool include_init = true;       // count the starting point as the first model
  std::int64_t iter_offset = 0;   // schedule offset when resuming mid-schedule
};

/// Running equal-weight average of captured iterates. n_models counts the
/// points currently folded in (the initialization included when the trainer
/// runs with include_init).
struct SwaState {
  ParamVector avg;
  std::int64_t n_models = 0;
  std::int64_t capture_every = 1;
};

/// avg <- (avg * n_models + w) / (n_models + 1), n_models incremented.
/// With n_models = 0 the capture replaces the average.
SwaState swa_update(SwaState s, const ParamVector& w);

struct Snapshot {
  std::int64_t iter;
  ParamVector params;
  double train_loss;  // minibatch loss (incl. L2) at the capture step
};

struct TrajectoryLog {
  std::vector<Snapshot> snapshots;  // strictly increasing iterations
  ParamVector init_params;          // starting point, kept when log_snapshots
  std::uint32_t config_hash = 0;
  std::uint64_t seed = 0;
};

/// Velocity update v <- momentum * v + grad, then w <- w - alpha * v.
/// With momentum = 0 this is the plain stochastic gradient update.
/// Throws NumericError on a nonfinite gradient; the model state is
/// left unchanged on any error path.
std::pair<MlpState, ParamVector> sgd_step(const MlpState& state,
                                          const ParamVector& velocity,
                                          const Batch& batch, double alpha,
                                          double momentum);

/// In-place step used by the training loop; returns the minibatch loss.
/// Mutates state.params and velocity only; allocation-free after warmup.
double sgd_step_inplace(MlpState& state, ParamVector& velocity,
                        const Batch& batch, double alpha, double momentum,
                        ForwardCache& cache);

struct StepInfo {
  std::int64_t iter;      // 1-based within this run
  double lr;
  double minibatch_loss;
  bool captured;
};

/// Observer called after every iteration; `swa` is null when averaging is
/// disabled. Used by the harness for CSV rows and periodic evaluation.
using StepObserver =
    std::function<void(const StepInfo&, const MlpState&, const SwaState*)>;

struct RunResult {
  MlpState swa_model;       // BN stats recomputed over the training set
  MlpState final_sgd_model; // last raw iterate, BN stats likewise recomputed
  TrajectoryLog log;
  ParamVector velocity;     // final momentum buffer (carried across phases)
  std::size_t bn_clamped = 0;
};

/// SGD with momentum plus the running weight average: iterate n steps under
/// cfg.schedule, fold the weights into the average at every capture point,
/// and finish with one batch-norm statistics pass over the training data for
/// both returned models. Deterministic given (seed, config, data). The loop
/// keeps exactly three persistent parameter buffers: the weights, the
/// momentum buffer, and the running average.
RunResult run_swa(const MlpState& init, const Dataset& train,
                  const TrainerConfig& cfg, const StepObserver& observer = {},
                  const ParamVector* initial_velocity = nullptr);

/// Conventional training from a fresh initialization (averaging disabled).
/// cfg.iters == 0 returns the initialization untouched.
RunResult pretrain(const MlpSpec& spec, const Dataset& train,
                   TrainerConfig cfg);

std::int64_t iters_per_epoch(const Dataset& train, int batch_size);

std::uint32_t config_hash(const TrainerConfig& cfg);

}  // namespace swa
