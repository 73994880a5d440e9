#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "swa/config.hpp"
#include "swa/errors.hpp"
#include "swa/experiment.hpp"

namespace fs = std::filesystem;
using namespace swa;

namespace {

ExperimentConfig tiny_config(const std::string& out, int seeds = 2) {
  ExperimentConfig cfg = parse_config(
      "[model]\n"
      "layers = 2 8 2\n"
      "l2 = 0.001\n"
      "[data]\n"
      "generator = blobs\n"
      "classes = 2\n"
      "n_train = 120\n"
      "n_test = 120\n"
      "noise = 0.4\n"
      "[pretrain]\n"
      "schedule.budget = 200\n"
      "batch_size = 24\n"
      "[swa]\n"
      "schedule.kind = cyclic\n"
      "schedule.alpha1 = 0.05\n"
      "schedule.alpha2 = 0.001\n"
      "schedule.cycle = 15\n"
      "iters = 150\n");
  cfg.outputs.dir = out;
  cfg.outputs.seeds = seeds;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  REQUIRE(in);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("tiny experiment emits every declared artifact") {
  const std::string out = "/tmp/swa_exp_smoke";
  fs::remove_all(out);
  const ExperimentConfig cfg = tiny_config(out);
  const ExperimentReport rep = run_experiment(cfg, /*quiet=*/true);

  CHECK(rep.seeds.size() == 2);
  CHECK(rep.budget_labels == std::vector<double>{1.0, 1.25, 1.5});
  CHECK(fs::exists(fs::path(out) / "resolved_config.txt"));
  CHECK(fs::exists(fs::path(out) / "summary.csv"));
  for (int r = 0; r < 2; ++r) {
    const fs::path seed_dir = fs::path(out) / ("seed_" + std::to_string(r));
    for (const char* f : {"pretrained.swac", "sgd_full.swac", "swa.swac",
                          "swa_last_sgd.swac", "metrics.csv", "pretrain_log.csv",
                          "sgd_log.csv", "swa_log.csv"})
      CHECK(fs::exists(seed_dir / f));
  }
  // The resolved config reparses to the one we ran.
  const ExperimentConfig echoed =
      parse_config(slurp(fs::path(out) / "resolved_config.txt"));
  CHECK(echoed == cfg);

  // Every CSV has a header and finite numeric cells.
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (entry.path().extension() != ".csv") continue;
    const auto rows = read_csv(entry.path());
    REQUIRE(rows.size() >= 2);
    for (std::size_t r = 1; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        if (rows[r][c].empty()) continue;  // swa column before the first capture
        char* end = nullptr;
        const double v = std::strtod(rows[r][c].c_str(), &end);
        if (end != rows[r][c].c_str() + rows[r][c].size()) continue;  // label cell
        CHECK(std::isfinite(v));
      }
  }
}

TEST_CASE("summary matches a recomputation from the per-seed metrics") {
  const std::string out = "/tmp/swa_exp_recompute";
  fs::remove_all(out);
  run_experiment(tiny_config(out, 3), true);

  // Collect swa_1.50 accuracy per seed from metrics.csv.
  std::vector<double> sgd, swa150;
  for (int r = 0; r < 3; ++r) {
    const auto rows =
        read_csv(fs::path(out) / ("seed_" + std::to_string(r)) / "metrics.csv");
    for (const auto& row : rows) {
      if (row[0] == "sgd_full") sgd.push_back(std::stod(row[1]));
      if (row[0] == "swa_1.50") swa150.push_back(std::stod(row[1]));
    }
  }
  REQUIRE(sgd.size() == 3);
  REQUIRE(swa150.size() == 3);

  const auto summary = read_csv(fs::path(out) / "summary.csv");
  REQUIRE(summary.front() ==
          std::vector<std::string>{"seed", "sgd_acc", "swa_acc_1.00",
                                   "swa_acc_1.25", "swa_acc_1.50"});
  const auto& mean_row = summary[summary.size() - 2];
  const auto& std_row = summary[summary.size() - 1];
  REQUIRE(mean_row[0] == "mean");
  REQUIRE(std_row[0] == "std");
  CHECK(std::stod(mean_row[1]) == doctest::Approx(mean_of(sgd)).epsilon(1e-14));
  CHECK(std::stod(mean_row[4]) == doctest::Approx(mean_of(swa150)).epsilon(1e-14));
  CHECK(std::stod(std_row[4]) == doctest::Approx(sample_std(swa150)).epsilon(1e-12));
}

TEST_CASE("disabling the averaging phase leaves SGD-only columns") {
  const std::string out = "/tmp/swa_exp_noswa";
  fs::remove_all(out);
  ExperimentConfig cfg = tiny_config(out, 1);
  cfg.swa.enabled = false;
  const ExperimentReport rep = run_experiment(cfg, true);
  CHECK(rep.budget_labels.empty());
  const auto summary = read_csv(fs::path(out) / "summary.csv");
  CHECK(summary.front() == std::vector<std::string>{"seed", "sgd_acc"});
  CHECK_FALSE(fs::exists(fs::path(out) / "seed_0" / "swa.swac"));
}

TEST_CASE("re-running the same config reproduces the outputs byte-for-byte") {
  const std::string out_a = "/tmp/swa_exp_det_a";
  const std::string out_b = "/tmp/swa_exp_det_b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  ExperimentConfig cfg = tiny_config(out_a, 2);
  run_experiment(cfg, true);
  cfg.outputs.dir = out_b;
  run_experiment(cfg, true);

  int compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(out_a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), out_a);
    if (rel == fs::path("resolved_config.txt")) continue;  // differs in out dir
    const fs::path other = fs::path(out_b) / rel;
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
    ++compared;
  }
  CHECK(compared >= 10);
}

TEST_CASE("phase failures carry a phase tag and keep partial outputs") {
  const std::string out = "/tmp/swa_exp_phase_err";
  fs::remove_all(out);
  ExperimentConfig cfg = tiny_config(out, 1);
  cfg.swa.batch_size = 100000;  // exceeds the dataset: the swa phase fails
  try {
    run_experiment(cfg, true);
    FAIL("expected a phase-tagged error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("[swa]") != std::string::npos);
    CHECK(e.kind() == ErrorKind::config);
  }
  // Earlier phases' outputs survive.
  CHECK(fs::exists(fs::path(out) / "seed_0" / "pretrained.swac"));
  CHECK(fs::exists(fs::path(out) / "seed_0" / "sgd_full.swac"));
}

TEST_CASE("optional landscape and ensemble artifacts are emitted when enabled") {
  const std::string out = "/tmp/swa_exp_artifacts";
  fs::remove_all(out);
  ExperimentConfig cfg = tiny_config(out, 1);
  cfg.outputs.landscape = true;
  cfg.outputs.ensemble = true;
  cfg.outputs.grid = 5;
  cfg.outputs.rays = 2;
  run_experiment(cfg, true);
  const fs::path land = fs::path(out) / "seed_0" / "landscape";
  for (const char* f : {"plane.csv", "plane.gp", "ray_swa.csv", "ray_sgd.csv",
                        "segment.csv", "segment.gp"})
    CHECK(fs::exists(land / f));
  CHECK(fs::exists(fs::path(out) / "seed_0" / "ensemble_gaps.csv"));
}
