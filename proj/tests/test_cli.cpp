// End-to-end checks of the swa_lab binary: exit codes and the
// trainer -> checkpoint -> landscape pipeline.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const char* kTmp = "/tmp/swa_cli_test";

int run(const std::string& args, const std::string& log = "") {
  std::string cmd = std::string(SWA_LAB_PATH) + " " + args;
  if (!log.empty()) cmd += " > " + log + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_config(const fs::path& path, bool batchnorm) {
  std::ofstream f(path);
  f << "[model]\n"
       "layers = 2 8 2\n"
       "batchnorm = " << (batchnorm ? "true" : "false") << "\n"
       "l2 = 0.001\n"
       "[data]\n"
       "generator = xor\n"
       "n_train = 160\n"
       "n_test = 160\n"
       "noise = 0.2\n"
       "[pretrain]\n"
       "schedule.budget = 240\n"
       "batch_size = 32\n"
       "[swa]\n"
       "schedule.kind = cyclic\n"
       "schedule.alpha1 = 0.05\n"
       "schedule.alpha2 = 0.001\n"
       "schedule.cycle = 20\n"
       "iters = 100\n"
       "[outputs]\n"
       "log_snapshots = true\n"
       "log_csv = false\n";
}

}  // namespace

TEST_CASE("cli: exit codes for config, io, and usage errors") {
  fs::remove_all(kTmp);
  fs::create_directories(kTmp);
  const fs::path cfg = fs::path(kTmp) / "cfg.ini";
  write_config(cfg, false);

  CHECK(run("eval /does/not/exist.swac --config " + cfg.string()) == 4);
  CHECK(run("train") == 2);  // --config missing

  const fs::path bad_cfg = fs::path(kTmp) / "bad.ini";
  {
    std::ofstream f(bad_cfg);
    f << "[model]\nlayers = 2 2\nwhat = 1\n";
  }
  CHECK(run("train --config " + bad_cfg.string()) == 2);
}

TEST_CASE("cli: train -> swa -> eval -> landscape pipeline agrees on metrics") {
  fs::remove_all(kTmp);
  fs::create_directories(kTmp);
  const fs::path cfg = fs::path(kTmp) / "cfg.ini";
  write_config(cfg, false);  // no BN so eval and probes share the exact path
  const std::string base = " --config " + cfg.string() + " --out " + kTmp;

  REQUIRE(run("train" + base, std::string(kTmp) + "/train.log") == 0);
  REQUIRE(fs::exists(fs::path(kTmp) / "pretrained.swac"));
  REQUIRE(run("swa" + base, std::string(kTmp) + "/swa.log") == 0);
  REQUIRE(fs::exists(fs::path(kTmp) / "swa.swac"));
  REQUIRE(fs::exists(fs::path(kTmp) / "snapshots" / "snap_0000.swac"));

  // Evaluate the SWA checkpoint directly.
  const fs::path eval_log = fs::path(kTmp) / "eval.log";
  REQUIRE(run("eval " + (fs::path(kTmp) / "swa.swac").string() + base,
              eval_log.string()) == 0);
  const std::string eval_out = slurp(eval_log);
  const auto pos = eval_out.find("test_err: ");
  REQUIRE(pos != std::string::npos);
  std::string eval_err = eval_out.substr(pos + 10);
  eval_err = eval_err.substr(0, eval_err.find('\n'));

  // The landscape CLI loads the same checkpoint; its t=0 sample must report
  // the identical test error.
  const fs::path seg_csv = fs::path(kTmp) / "segment.csv";
  REQUIRE(run("landscape segment --wa " + (fs::path(kTmp) / "swa.swac").string() +
                  " --wb " + (fs::path(kTmp) / "swa_last_sgd.swac").string() +
                  " --csv " + seg_csv.string() + base,
              std::string(kTmp) + "/seg.log") == 0);
  std::ifstream seg(seg_csv);
  REQUIRE(seg);
  std::string line;
  std::getline(seg, line);  // header
  bool found = false;
  while (std::getline(seg, line)) {
    std::stringstream ss(line);
    std::string t, dist, train_loss, test_err;
    std::getline(ss, t, ',');
    std::getline(ss, dist, ',');
    std::getline(ss, train_loss, ',');
    std::getline(ss, test_err, ',');
    if (t == "0") {
      CHECK(test_err == eval_err);
      found = true;
    }
  }
  CHECK(found);

  // Ensemble comparison over the captured snapshots.
  REQUIRE(run("ensemble-compare --dir " + (fs::path(kTmp) / "snapshots").string() +
                  " --csv " + (fs::path(kTmp) / "gaps.csv").string() + base,
              std::string(kTmp) + "/ens.log") == 0);
  CHECK(fs::exists(fs::path(kTmp) / "gaps.csv"));

  // Corrupt one byte of the checkpoint: the loader must exit with the io code.
  {
    std::fstream f(fs::path(kTmp) / "swa.swac",
                   std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(30);
    char c;
    f.seekg(30);
    f.get(c);
    f.seekp(30);
    f.put(static_cast<char>(c ^ 0x10));
  }
  CHECK(run("eval " + (fs::path(kTmp) / "swa.swac").string() + base,
            std::string(kTmp) + "/corrupt.log") == 4);
}

TEST_CASE("cli: gradcheck and quad-sim run clean") {
  fs::create_directories(kTmp);
  CHECK(run("gradcheck --quiet", std::string(kTmp) + "/gc.log") == 0);
  CHECK(run("quad-sim --dim 8 --alpha 0.2 --iters 3000 --replicas 2 --out " +
                std::string(kTmp),
            std::string(kTmp) + "/quad.log") == 0);
  CHECK(fs::exists(fs::path(kTmp) / "quad_sim.csv"));
}
