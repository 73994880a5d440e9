#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swa/checkpoint.hpp"
#include "swa/config.hpp"
#include "swa/csv.hpp"
#include "swa/ensemble.hpp"
#include "swa/errors.hpp"
#include "swa/experiment.hpp"
#include "swa/gradcheck.hpp"
#include "swa/landscape.hpp"
#include "swa/quadratic.hpp"
#include "swa/trainer.hpp"

namespace fs = std::filesystem;
using namespace swa;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed_offset = 0;
  bool quiet = false;
};

ExperimentConfig load_cfg(const GlobalOpts& g) {
  if (g.config_path.empty()) throw ConfigError("--config is required for this command");
  ExperimentConfig cfg = load_config(g.config_path);
  if (!g.out_dir.empty()) cfg.outputs.dir = g.out_dir;
  if (g.seed_offset != 0) {
    cfg.model_seed += static_cast<std::uint64_t>(g.seed_offset);
    cfg.pretrain.seed += static_cast<std::uint64_t>(g.seed_offset);
    cfg.swa.seed += static_cast<std::uint64_t>(g.seed_offset);
  }
  return cfg;
}

std::vector<double> linspace_with_zero(double a, double b, int steps) {
  std::vector<double> ts;
  for (int i = 0; i <= steps; ++i) {
    double t = a + (b - a) * i / static_cast<double>(steps);
    if (std::abs(t) < 1e-12) t = 0.0;
    ts.push_back(t);
  }
  if (std::find(ts.begin(), ts.end(), 0.0) == ts.end())
    throw ConfigError("landscape: the t grid must contain 0; adjust the range/steps");
  return ts;
}

StepObserver csv_logger(std::optional<CsvWriter>& sink, const std::string& path,
                        const ExperimentConfig& cfg, const Dataset& train,
                        const Dataset& test, std::int64_t cadence) {
  sink.emplace(path, std::vector<std::string>{"iter", "lr", "train_loss",
                                              "test_err", "swa_test_err"});
  return [&, cadence](const StepInfo& info, const MlpState& cur,
                      const SwaState* swa_state) {
    if (info.iter % cadence != 0) return;
    const double test_err = evaluate(cur, test).error;
    const double train_loss = evaluate(cur, train).loss;
    if (swa_state && swa_state->n_models > 0) {
      MlpState st;
      st.spec = cfg.model;
      st.params = swa_state->avg;
      st.bn = cur.bn;
      bool any_bn = false;
      for (int l = 0; l < cfg.model.n_hidden(); ++l)
        if (cfg.model.has_bn(l)) any_bn = true;
      if (any_bn) st = recompute_bn_stats(st, train).state;
      sink->row(info.iter, info.lr, train_loss, test_err,
                evaluate(st, test).error);
    } else {
      sink->row(info.iter, info.lr, train_loss, test_err, "");
    }
  };
}

int cmd_train(const GlobalOpts& g, double frac_override) {
  ExperimentConfig cfg = load_cfg(g);
  if (frac_override >= 0.0) cfg.pretrain.frac = frac_override;
  const auto [train, test] = make_dataset(cfg.data);
  fs::create_directories(cfg.outputs.dir);

  TrainerConfig tc;
  tc.schedule = cfg.pretrain_schedule();
  tc.momentum = cfg.pretrain.momentum;
  tc.batch_size = cfg.pretrain.batch_size;
  tc.iters = static_cast<std::int64_t>(
      std::llround(cfg.pretrain.frac * cfg.pretrain.budget));
  tc.seed = cfg.pretrain.seed;
  tc.swa_enabled = false;

  std::optional<CsvWriter> log;
  StepObserver obs;
  if (cfg.outputs.log_csv)
    obs = csv_logger(log, (fs::path(cfg.outputs.dir) / "pretrain_log.csv").string(),
                     cfg, train, test,
                     cfg.outputs.eval_every > 0
                         ? cfg.outputs.eval_every
                         : iters_per_epoch(train, tc.batch_size));
  const MlpState init = init_state(cfg.model, cfg.model_seed);
  const RunResult res = run_swa(init, train, tc, obs);
  const std::string ckpt = (fs::path(cfg.outputs.dir) / "pretrained.swac").string();
  save_checkpoint(res.final_sgd_model, ckpt);
  const EvalMetrics m = evaluate(res.final_sgd_model, test);
  if (!g.quiet)
    std::cout << "pretrained: iters=" << tc.iters << " test_err=" << m.error
              << " -> " << ckpt << "\n";
  return 0;
}

int cmd_swa(const GlobalOpts& g, const std::string& init_path) {
  ExperimentConfig cfg = load_cfg(g);
  const auto [train, test] = make_dataset(cfg.data);
  fs::create_directories(cfg.outputs.dir);

  const std::string init_file =
      init_path.empty() ? (fs::path(cfg.outputs.dir) / "pretrained.swac").string()
                        : init_path;
  MlpState init =
      load_checkpoint(init_file, cfg.model.activation, cfg.model.l2_coeff);

  TrainerConfig tc;
  tc.schedule = cfg.swa_schedule();
  tc.momentum = cfg.swa.momentum;
  tc.batch_size = cfg.swa.batch_size;
  tc.iters = cfg.swa.iters;
  tc.capture_every = cfg.swa.capture_every;
  tc.seed = cfg.swa.seed;
  tc.swa_enabled = true;
  tc.include_init = cfg.swa.include_init;
  tc.log_snapshots = cfg.outputs.log_snapshots;

  std::optional<CsvWriter> log;
  StepObserver obs;
  if (cfg.outputs.log_csv)
    obs = csv_logger(log, (fs::path(cfg.outputs.dir) / "swa_log.csv").string(),
                     cfg, train, test,
                     cfg.outputs.eval_every > 0
                         ? cfg.outputs.eval_every
                         : iters_per_epoch(train, tc.batch_size));
  const RunResult res = run_swa(init, train, tc, obs);
  save_checkpoint(res.swa_model, (fs::path(cfg.outputs.dir) / "swa.swac").string());
  save_checkpoint(res.final_sgd_model,
                  (fs::path(cfg.outputs.dir) / "swa_last_sgd.swac").string());
  if (tc.log_snapshots) {
    const fs::path snap_dir = fs::path(cfg.outputs.dir) / "snapshots";
    fs::create_directories(snap_dir);
    for (std::size_t s = 0; s < res.log.snapshots.size(); ++s) {
      char name[32];
      std::snprintf(name, sizeof name, "snap_%04zu.swac", s);
      MlpState st;
      st.spec = cfg.model;
      st.params = res.log.snapshots[s].params;
      st.bn = res.swa_model.bn;
      save_checkpoint(st, (snap_dir / name).string());
    }
  }
  const EvalMetrics swa_m = evaluate(res.swa_model, test);
  const EvalMetrics sgd_m = evaluate(res.final_sgd_model, test);
  if (!g.quiet)
    std::cout << "swa: captures=" << res.log.snapshots.size()
              << " swa_test_err=" << swa_m.error
              << " last_sgd_test_err=" << sgd_m.error << "\n";
  return 0;
}

int cmd_eval(const GlobalOpts& g, const std::string& ckpt) {
  const ExperimentConfig cfg = load_cfg(g);
  const auto [train, test] = make_dataset(cfg.data);
  const MlpState st = load_checkpoint(ckpt, cfg.model.activation, cfg.model.l2_coeff);
  const EvalMetrics train_m = evaluate(st, train);
  const EvalMetrics test_m = evaluate(st, test);
  std::cout << "checkpoint: " << ckpt << "\n"
            << "train_loss: " << fmt_double(train_m.loss) << "\n"
            << "test_err: " << fmt_double(test_m.error) << "\n"
            << "test_acc: " << fmt_double(1.0 - test_m.error) << "\n";
  return 0;
}

int cmd_landscape_plane(const GlobalOpts& g, const std::string& p1,
                        const std::string& p2, const std::string& p3,
                        const std::string& out_csv) {
  const ExperimentConfig cfg = load_cfg(g);
  const auto [train, test] = make_dataset(cfg.data);
  const auto w1 = load_checkpoint(p1, cfg.model.activation, cfg.model.l2_coeff);
  const auto w2 = load_checkpoint(p2, cfg.model.activation, cfg.model.l2_coeff);
  const auto w3 = load_checkpoint(p3, cfg.model.activation, cfg.model.l2_coeff);
  const PlaneBasis basis = plane_from_points(w1.params, w2.params, w3.params);

  double xmin = std::min(0.0, basis.w3_x), xmax = std::max(basis.u_norm, basis.w3_x);
  double ymin = 0.0, ymax = basis.v_norm;
  const double padx = 0.2 * (xmax - xmin), pady = 0.2 * (ymax - ymin);
  std::vector<double> xs, ys;
  const int n = cfg.outputs.grid;
  for (int i = 0; i < n; ++i) {
    xs.push_back(xmin - padx + (xmax - xmin + 2 * padx) * i / (n - 1.0));
    ys.push_back(ymin - pady + (ymax - ymin + 2 * pady) * i / (n - 1.0));
  }
  const PointEvaluator ev(cfg.model, train, test);
  const GridSurface grid = evaluate_grid(basis, ev, xs, ys);
  fs::create_directories(fs::path(out_csv).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(out_csv).parent_path());
  write_plane_csv(out_csv, grid);
  write_gnuplot_script(out_csv, "plane");
  if (!g.quiet)
    std::cout << "plane: " << n << "x" << n << " grid, " << ev.evals()
              << " evaluations -> " << out_csv << "\n";
  return 0;
}

int cmd_landscape_ray(const GlobalOpts& g, const std::string& center_path,
                      int rays, double tmax, int steps, std::uint64_t seed,
                      const std::string& out_csv) {
  const ExperimentConfig cfg = load_cfg(g);
  const auto [train, test] = make_dataset(cfg.data);
  const auto center =
      load_checkpoint(center_path, cfg.model.activation, cfg.model.l2_coeff);
  std::vector<double> ts;
  for (int i = -steps; i <= steps; ++i)
    ts.push_back(tmax * i / static_cast<double>(steps));
  const PointEvaluator ev(cfg.model, train, test);
  const auto profiles = ray_profile(center.params, ev, rays, ts, seed);
  write_ray_csv(out_csv, profiles);
  write_gnuplot_script(out_csv, "ray");
  if (!g.quiet)
    std::cout << "ray: " << rays << " rays x " << ts.size() << " points -> "
              << out_csv << "\n";
  return 0;
}

int cmd_landscape_segment(const GlobalOpts& g, const std::string& wa_path,
                          const std::string& wb_path, double t0, double t1,
                          int steps, const std::string& out_csv) {
  const ExperimentConfig cfg = load_cfg(g);
  const auto [train, test] = make_dataset(cfg.data);
  const auto wa = load_checkpoint(wa_path, cfg.model.activation, cfg.model.l2_coeff);
  const auto wb = load_checkpoint(wb_path, cfg.model.activation, cfg.model.l2_coeff);
  const PointEvaluator ev(cfg.model, train, test);
  const RayProfile prof =
      segment_profile(wa.params, wb.params, ev, linspace_with_zero(t0, t1, steps));
  if (prof.degenerate)
    std::cerr << "warning: segment endpoints coincide; profile is flat\n";
  write_segment_csv(out_csv, prof);
  write_gnuplot_script(out_csv, "segment");
  if (!g.quiet)
    std::cout << "segment: " << prof.ts.size() << " points, length "
              << prof.scale << " -> " << out_csv << "\n";
  return 0;
}

int cmd_ensemble_compare(const GlobalOpts& g, std::vector<std::string> paths,
                         const std::string& dir, const std::string& out_csv) {
  const ExperimentConfig cfg = load_cfg(g);
  const auto [train, test] = make_dataset(cfg.data);
  if (!dir.empty()) {
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".swac") paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());
  }
  if (paths.size() < 2)
    throw ConfigError("ensemble-compare: need at least two snapshot checkpoints");
  std::vector<ParamVector> models;
  for (const auto& p : paths)
    models.push_back(
        load_checkpoint(p, cfg.model.activation, cfg.model.l2_coeff).params);
  const SnapshotSet set = SnapshotSet::from_models(std::move(models));
  const PredictionGap gap = gap_report(cfg.model, set, train, test);
  write_gap_csv(out_csv, gap);
  if (!g.quiet) {
    std::cout << "snapshots: " << paths.size() << "\n";
    std::cout << "ens_vs_center: " << fmt_double(gap.ens_vs_center) << "\n";
    const double min_gap = *std::min_element(gap.consecutive_gaps.begin(),
                                             gap.consecutive_gaps.end());
    std::cout << "min_consecutive_gap: " << fmt_double(min_gap) << "\n";
    std::cout << "agreement_center_vs_ensemble: " << fmt_double(gap.center_agreement)
              << "\n";
    std::cout << "-> " << out_csv << "\n";
  }
  return 0;
}

int cmd_quad_sim(const GlobalOpts& g, int dim, double alpha, std::int64_t iters,
                 std::uint64_t seed, int replicas, double noise,
                 std::string out_csv) {
  if (out_csv.empty()) {
    const fs::path dir = g.out_dir.empty() ? fs::path("out") : fs::path(g.out_dir);
    fs::create_directories(dir);
    out_csv = (dir / "quad_sim.csv").string();
  }
  const QuadraticProblem p = QuadraticProblem::diagonal(dim, 0.5, 2.0, noise, seed);
  const std::int64_t burn = iters / 5;

  std::vector<SimResult> sims;
  for (int r = 0; r < replicas; ++r)
    sims.push_back(simulate_sgd(p, alpha, burn + iters, burn,
                                seed + static_cast<std::uint64_t>(r) + 1));

  double rms = 0.0, ratio = 0.0;
  for (const auto& s : sims) {
    rms += s.stats.raw_rms;
    ratio += ellipsoid_check(s.stats, dim);
  }
  rms /= replicas;
  ratio /= replicas;

  CsvWriter out(out_csv, {"k", "mean_err", "raw_iterate_rms", "mahalanobis_ratio"});
  const auto& marks = sims.front().stats.swa_error_curve;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    double err = 0.0;
    for (const auto& s : sims) err += s.stats.swa_error_curve[i].second;
    out.row(marks[i].first, err / replicas, rms, ratio);
  }
  if (!g.quiet) {
    const auto& last = marks.back();
    std::cout << "dim=" << dim << " alpha=" << alpha << " replicas=" << replicas
              << "\n";
    std::cout << "ellipsoid_ratio: " << fmt_double(ratio) << "\n";
    std::cout << "raw_iterate_rms: " << fmt_double(rms) << "\n";
    std::cout << "avg_err@k=" << last.first << ": "
              << fmt_double(last.second) << "\n";
    std::cout << "-> " << out_csv << "\n";
  }
  return 0;
}

int cmd_gradcheck(const GlobalOpts& g) {
  const auto cases = run_gradcheck();
  bool ok = true;
  for (const auto& c : cases) {
    const bool pass = c.max_rel_err < 1e-6;
    ok = ok && pass;
    if (!g.quiet || !pass)
      std::cout << (pass ? "  ok  " : " FAIL ") << c.name
                << "  max_rel_err=" << fmt_double(c.max_rel_err) << "\n";
  }
  if (!ok) throw NumericError("gradcheck: analytic and finite-difference gradients disagree");
  return 0;
}

int cmd_experiment(const GlobalOpts& g) {
  const ExperimentConfig cfg = load_cfg(g);
  const ExperimentReport rep = run_experiment(cfg, g.quiet);
  if (!g.quiet) {
    std::vector<double> sgd;
    for (const auto& s : rep.seeds) sgd.push_back(s.sgd_acc);
    std::cout << "sgd: " << fmt_double(mean_of(sgd)) << " +- "
              << fmt_double(sample_std(sgd)) << "\n";
    for (std::size_t k = 0; k < rep.budget_labels.size(); ++k) {
      std::vector<double> col;
      for (const auto& s : rep.seeds) col.push_back(s.swa_accs[k]);
      std::cout << "swa@" << rep.budget_labels[k] << ": "
                << fmt_double(mean_of(col)) << " +- "
                << fmt_double(sample_std(col)) << "\n";
    }
    std::cout << "-> " << rep.out_dir << "/summary.csv\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic weight averaging laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--config", g.config_path, "experiment config file");
  app.add_option("--seed", g.seed_offset, "offset added to all training seeds");
  app.add_option("--out", g.out_dir, "output directory (overrides [outputs] dir)");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  auto* train = app.add_subcommand("train", "conventional (pretraining) run");
  double frac_override = -1.0;
  train->add_option("--frac", frac_override, "override pretrain budget fraction");

  auto* swa_cmd = app.add_subcommand("swa", "averaging phase from a checkpoint");
  std::string init_path;
  swa_cmd->add_option("--init", init_path, "initial checkpoint (default <out>/pretrained.swac)");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_ckpt;
  eval->add_option("checkpoint", eval_ckpt, "checkpoint path")->required();

  auto* landscape = app.add_subcommand("landscape", "loss-geometry probes");
  landscape->require_subcommand(1);
  auto* plane = landscape->add_subcommand("plane", "plane through three checkpoints");
  std::string p1, p2, p3, plane_csv = "plane.csv";
  plane->add_option("--w1", p1)->required();
  plane->add_option("--w2", p2)->required();
  plane->add_option("--w3", p3)->required();
  plane->add_option("--csv", plane_csv, "output CSV path");

  auto* ray = landscape->add_subcommand("ray", "random rays from a checkpoint");
  std::string ray_center, ray_csv = "ray.csv";
  int ray_count = 10, ray_steps = 20;
  double ray_tmax = 10.0;
  std::uint64_t ray_seed = 7;
  ray->add_option("--center", ray_center)->required();
  ray->add_option("--rays", ray_count);
  ray->add_option("--tmax", ray_tmax);
  ray->add_option("--steps", ray_steps);
  ray->add_option("--ray-seed", ray_seed);
  ray->add_option("--csv", ray_csv);

  auto* segment = landscape->add_subcommand("segment", "segment between two checkpoints");
  std::string wa_path, wb_path, seg_csv = "segment.csv";
  double seg_t0 = -0.25, seg_t1 = 1.25;
  int seg_steps = 30;
  segment->add_option("--wa", wa_path, "checkpoint at t=0 (e.g. the SWA model)")->required();
  segment->add_option("--wb", wb_path, "checkpoint at t=1 (e.g. the SGD model)")->required();
  segment->add_option("--t0", seg_t0);
  segment->add_option("--t1", seg_t1);
  segment->add_option("--steps", seg_steps);
  segment->add_option("--csv", seg_csv);

  auto* ens = app.add_subcommand("ensemble-compare",
                                 "prediction vs weight averaging over snapshots");
  std::vector<std::string> snap_paths;
  std::string snap_dir, ens_csv = "ensemble_gaps.csv";
  ens->add_option("snapshots", snap_paths, "snapshot checkpoints");
  ens->add_option("--dir", snap_dir, "directory of .swac snapshots");
  ens->add_option("--csv", ens_csv);

  auto* quad = app.add_subcommand("quad-sim", "noisy quadratic SGD sandbox");
  int q_dim = 20, q_replicas = 4;
  double q_alpha = 0.1, q_noise = 1.0;
  std::int64_t q_iters = 10000;
  std::uint64_t q_seed = 1;
  std::string q_csv;
  quad->add_option("--dim", q_dim);
  quad->add_option("--alpha", q_alpha);
  quad->add_option("--iters", q_iters);
  quad->add_option("--sim-seed", q_seed);
  quad->add_option("--replicas", q_replicas);
  quad->add_option("--noise", q_noise);
  quad->add_option("--csv", q_csv);

  auto* gc = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
  auto* exp = app.add_subcommand("experiment", "full multi-seed protocol");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(g, frac_override);
    if (swa_cmd->parsed()) return cmd_swa(g, init_path);
    if (eval->parsed()) return cmd_eval(g, eval_ckpt);
    if (landscape->parsed()) {
      if (plane->parsed()) return cmd_landscape_plane(g, p1, p2, p3, plane_csv);
      if (ray->parsed())
        return cmd_landscape_ray(g, ray_center, ray_count, ray_tmax, ray_steps,
                                 ray_seed, ray_csv);
      if (segment->parsed())
        return cmd_landscape_segment(g, wa_path, wb_path, seg_t0, seg_t1,
                                     seg_steps, seg_csv);
    }
    if (ens->parsed()) return cmd_ensemble_compare(g, snap_paths, snap_dir, ens_csv);
    if (quad->parsed())
      return cmd_quad_sim(g, q_dim, q_alpha, q_iters, q_seed, q_replicas,
                          q_noise, q_csv);
    if (gc->parsed()) return cmd_gradcheck(g);
    if (exp->parsed()) return cmd_experiment(g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::numeric: return 3;
      case ErrorKind::io: return 4;
      default: return 2;  // config, shape, domain
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
