#pragma once

#include <cstdint>
#include <string>

#include "swa/dataset.hpp"
#include "swa/mlp.hpp"
#include "swa/schedules.hpp"

namespace swa {

// Experiment configuration: line-oriented `key = value` with [section]
// headers ([model], [data], [pretrain], [swa], [outputs]); '#' starts a
// comment. Unknown sections or keys are rejected with the offending line
// number; validation errors name the key.

struct PretrainConfig {
  std::string kind = "piecewise";  // schedule.kind
  double alpha1 = 0.1;
  double alpha2 = 0.001;       // cyclic only
  std::int64_t cycle = 75;     // cyclic only
  std::int64_t budget = 3000;  // B: conventional-training budget, iterations
  double frac = 0.75;          // fraction of B the pretrain phase runs
  double momentum = 0.9;
  int batch_size = 64;
  std::uint64_t seed = 1;

  bool operator==(const PretrainConfig&) const = default;
};

struct SwaPhaseConfig {
  bool enabled = true;
  std::string kind = "cyclic";
  double alpha1 = 0.05;
  double alpha2 = 5e-4;
  std::int64_t cycle = 75;
  std::int64_t budget = 0;  // piecewise kind only; 0 = pretrain budget
  std::int64_t seg_start = 1600, seg_len = 100, period = 1800;  // cosine kind
  std::int64_t iters = 0;         // 0 resolves to 0.75 * pretrain budget
  std::int64_t capture_every = 0; // 0 = cycle (cyclic) or once per epoch
  double momentum = 0.9;
  int batch_size = 64;
  std::uint64_t seed = 2;
  bool include_init = true;

  bool operator==(const SwaPhaseConfig&) const = default;
};

struct OutputsConfig {
  std::string dir = "out";
  int seeds = 5;
  bool log_csv = true;
  bool log_snapshots = false;
  std::int64_t eval_every = 0;  // CSV/eval cadence; 0 = once per epoch
  bool landscape = false;       // emit plane/ray/segment artifacts (seed 0)
  bool ensemble = false;        // emit the snapshot-ensemble gap report
  int rays = 10;
  double ray_tmax = 10.0;
  int grid = 25;

  bool operator==(const OutputsConfig&) const = default;
};

struct ExperimentConfig {
  MlpSpec model;
  std::uint64_t model_seed = 11;
  DataConfig data;
  PretrainConfig pretrain;
  SwaPhaseConfig swa;
  OutputsConfig outputs;

  LrSchedule pretrain_schedule() const;
  LrSchedule swa_schedule() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses, validates and resolves defaults (e.g. swa.iters = 0.75 * budget).
ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin = "<string>");
ExperimentConfig load_config(const std::string& path);

/// Canonical dump of the fully resolved config; parse_config(dump_config(c))
/// reproduces c exactly.
std::string dump_config(const ExperimentConfig& cfg);

std::string to_string(Generator g);
std::string to_string(Activation a);

}  // namespace swa
