#pragma once

#include <string>
#include <vector>

#include "swa/config.hpp"
#include "swa/ensemble.hpp"
#include "swa/landscape.hpp"
#include "swa/trainer.hpp"

namespace swa {

struct SeedOutcome {
  int replica = 0;
  double pretrain_acc = 0.0;
  double sgd_acc = 0.0;                // conventional training, full budget
  std::vector<double> swa_accs;       // aligned with ExperimentReport::budget_labels
};

struct ExperimentReport {
  std::vector<double> budget_labels;  // e.g. 1.0, 1.25, 1.5
  std::vector<SeedOutcome> seeds;
  std::string out_dir;
};

/// Full protocol, per replica: pretrain for frac*B with the conventional
/// schedule, continue it to the full budget as the SGD baseline, then run the
/// averaging phase from the pretrained point, evaluating the running average
/// at each remaining quarter-budget mark. Emits checkpoints, CSV logs, a
/// summary table (mean +- sample std over seeds) and optional
/// landscape/ensemble artifacts under cfg.outputs.dir.
ExperimentReport run_experiment(const ExperimentConfig& cfg, bool quiet = false);

double mean_of(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);

// CSV/report emitters shared by the CLI and the experiment driver.
void write_plane_csv(const std::string& path, const GridSurface& g);
void write_ray_csv(const std::string& path, const std::vector<RayProfile>& profiles);
void write_segment_csv(const std::string& path, const RayProfile& prof);
void write_gap_csv(const std::string& path, const PredictionGap& gap);
/// Companion gnuplot script for a landscape CSV; kind is plane|ray|segment.
void write_gnuplot_script(const std::string& csv_path, const std::string& kind);

}  // namespace swa
