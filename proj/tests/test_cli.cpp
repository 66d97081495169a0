#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "crgan/checkpoint.hpp"
#include "crgan/datasets.hpp"
#include "crgan/simulate.hpp"
#include "crgan/training.hpp"

using namespace crgan;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CRGAN_CLI_PATH) + " " + args +
                          " > cli_stdout.txt 2> cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / name;
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const {
    return (path / leaf).string();
  }
};

}  // namespace

TEST_CASE("datagen: determinism and length override") {
  TempDir dir("crgan_cli_datagen");
  const std::string a = dir / "a.csv";
  const std::string b = dir / "b.csv";
  REQUIRE(run_cli("datagen ar1 --length 2000 --seed 7 --out " + a) == 0);
  REQUIRE(run_cli("datagen ar1 --length 2000 --seed 7 --out " + b) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(fs::exists(a + ".meta"));
  CHECK(fs::exists(a + ".echo"));

  const std::string lorenz = dir / "lorenz.csv";
  REQUIRE(run_cli("datagen lorenz --length 1000 --out " + lorenz) == 0);
  const SeriesDataset s = read_series_csv(lorenz);
  CHECK(s.length() == 1000);
  CHECK(s.dim() == 3);

  const std::string mg = dir / "mg.csv";
  REQUIRE(run_cli("datagen mackey-glass --length 500 --out " + mg) == 0);
  CHECK(fs::exists(dir / "mg_noiseless.csv"));
}

TEST_CASE("train: k_max 0 returns the initialized model") {
  TempDir dir("crgan_cli_train0");
  const std::string data = dir / "ar1.csv";
  REQUIRE(run_cli("datagen ar1 --length 1200 --seed 3 --out " + data) == 0);
  const std::string out = dir / "run";
  REQUIRE(run_cli("train --data " + data +
                  " --k-max 0 --no-pretrain --hidden 12 --t-s 20 --t-f 10"
                  " --seed 5 --out " + out) == 0);

  const Checkpoint ck = load_checkpoint(out + "/checkpoint.bin");
  CrGanModel loaded = crgan_from_checkpoint(ck);
  CrGanModel fresh = make_crgan(ModelConfig{1, 12}, 5);
  std::vector<Param*> lp = loaded.gen.params(), fp = fresh.gen.params();
  for (std::size_t i = 0; i < lp.size(); ++i) {
    CHECK((lp[i]->value - fp[i]->value).norm() == 0.0);
  }
  // trace has a header and no records
  const LossTrace trace = LossTrace::read_csv(out + "/trace.csv");
  CHECK(trace.records.empty());
  CHECK(fs::exists(out + "/config_echo.txt"));
}

TEST_CASE("train + forecast round trip with deterministic outputs") {
  TempDir dir("crgan_cli_fc");
  const std::string data = dir / "ar1.csv";
  REQUIRE(run_cli("datagen ar1 --length 1500 --seed 11 --out " + data) == 0);
  const std::string out = dir / "run";
  REQUIRE(run_cli("train --data " + data +
                  " --k-max 3 --no-pretrain --hidden 12 --t-s 20 --t-f 10"
                  " --n-b 8 --out " + out) == 0);

  const std::string f1 = dir / "f1";
  const std::string f2 = dir / "f2";
  const std::string fc_args = " --data " + data + " --checkpoint " + out +
                              "/checkpoint.bin --prefix-len 20 --ns 50"
                              " --horizon 10 --seed 21 --levels 0.6,0.9";
  REQUIRE(run_cli("forecast" + fc_args + " --out " + f1) == 0);
  REQUIRE(run_cli("forecast" + fc_args + " --threads 2 --out " + f2) == 0);
  CHECK(slurp(f1 + "/ensemble.csv") == slurp(f2 + "/ensemble.csv"));
  CHECK(slurp(f1 + "/intervals.csv") == slurp(f2 + "/intervals.csv"));

  // single-trajectory degenerate run
  const std::string f3 = dir / "f3";
  REQUIRE(run_cli("forecast --data " + data + " --checkpoint " + out +
                  "/checkpoint.bin --prefix-len 20 --ns 1 --horizon 5"
                  " --levels 0.9,0.6 --seed 2 --out " + f3) == 2);
  // intervals need at least 40 trajectories; ensemble-only run succeeds
  REQUIRE(run_cli("forecast --data " + data + " --checkpoint " + out +
                  "/checkpoint.bin --prefix-len 20 --ns 40 --horizon 5"
                  " --levels 0.9 --seed 2 --out " + f3) == 0);
}

TEST_CASE("evaluate loss-ratio reads traces; config errors exit with 2") {
  TempDir dir("crgan_cli_eval");
  {
    std::ofstream trace(dir / "trace.csv");
    trace << "iteration,d_loss,g_loss,mmd1,mmd2_or_marginal_loss,lr,clipped\n";
    for (int i = 0; i < 10; ++i) {
      trace << i << ",1.0,2.0,0.04,0,5e-5,0\n";
    }
  }
  REQUIRE(run_cli("evaluate loss-ratio --trace " + (dir / "trace.csv") +
                  " --tail 5 --out " + (dir / "lr")) == 0);
  CHECK(slurp(dir / "lr/summary.txt").find("loss_ratio=0.02") !=
        std::string::npos);

  CHECK(run_cli("evaluate loss-ratio --trace " + (dir / "trace.csv") +
                " --tail 50 --out " + (dir / "lr2")) == 2);
  CHECK(run_cli("evaluate loss-ratio --trace " + (dir / "missing.csv") +
                " --tail 2 --out " + (dir / "lr3")) == 4);
  CHECK(run_cli("train --data nope.csv") == 4);
  CHECK(run_cli("train") == 2);           // missing required flag
  CHECK(run_cli("datagen unknown --out " + (dir / "x.csv")) == 2);
}

TEST_CASE("evaluate kl-noise on a fabricated ensemble") {
  TempDir dir("crgan_cli_kl");
  const std::string data = dir / "ar1.csv";
  REQUIRE(run_cli("datagen ar1 --length 5000 --seed 13 --out " + data) == 0);

  // ensemble drawn from the true process restarted at the data end
  const SeriesDataset series = read_series_csv(data);
  ForecastEnsemble ens;
  ens.x_dim = 1;
  ens.horizon = 100;
  RngStream rng(14);
  for (int j = 0; j < 200; ++j) {
    Matrix traj(1, 100);
    double x = series.values(0, series.length() - 1);
    for (Index t = 0; t < 100; ++t) {
      const bool flip = rng.uniform() <= 0.5;
      double eps = (flip ? -0.4 : 0.4) + 0.2 * rng.normal();
      // keep the rare far tail out of the support comparison
      while (std::abs(eps) > 1.0) {
        eps = (flip ? -0.4 : 0.4) + 0.2 * rng.normal();
      }
      x = 0.8 * x + eps;
      traj(0, t) = x;
    }
    ens.trajectories.push_back(traj);
  }
  write_ensemble_csv(dir / "ensemble.csv", ens);

  REQUIRE(run_cli("evaluate kl-noise --ensemble " + (dir / "ensemble.csv") +
                  " --data " + data + " --out " + (dir / "kl")) == 0);
  const std::string summary = slurp(dir / "kl/summary.txt");
  CHECK(summary.find("kl_divergence=") != std::string::npos);
  // true-process noise should sit close to the data noise distribution
  const double kl = std::stod(summary.substr(summary.find('=') + 1));
  CHECK(kl < 0.05);
  CHECK(fs::exists(dir / "kl/noise_histograms.csv"));
}
