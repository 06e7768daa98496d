#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "dagdist/synth.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("dagdist_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string dir(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(CLI_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("usage errors exit with code two, help with zero") {
  CHECK(run("--help") == 0);
  CHECK(run("generate --help") == 0);
  CHECK(run("") == 2);                      // a subcommand is required
  CHECK(run("generate") == 2);              // --out is required
  CHECK(run("generate --bogus x") == 2);    // unknown flag
  CHECK(run("frobnicate") == 2);            // unknown subcommand
}

TEST_CASE("bad inputs exit with code two") {
  TempDir tmp;
  CHECK(run("project --in " + tmp.dir("absent.csv") + " --out " + tmp.dir("o")) == 2);
  CHECK(run("generate --out " + tmp.dir("g") + " --p 3 --edges 99") == 2);
  CHECK(run("fit --data " + tmp.dir("absent.csv") + " --out " + tmp.dir("f")) == 2);
  CHECK(run("eval --checkpoint " + tmp.dir("absent.json") + " --out " + tmp.dir("e")) == 2);

  std::ofstream bad(tmp.dir("notsquare.csv"));
  bad << "1,2,3\n4,5,6\n";
  bad.close();
  CHECK(run("project --in " + tmp.dir("notsquare.csv") + " --out " + tmp.dir("o2")) == 2);
}

TEST_CASE("the full pipeline produces every documented artifact") {
  TempDir tmp;
  const std::string gen = tmp.dir("gen"), fit = tmp.dir("fit"), eval = tmp.dir("eval"),
                    prj = tmp.dir("prj");

  REQUIRE(run("generate --out " + gen + " --p 4 --edges 4 --n 120 --seed 5") == 0);
  for (const char* name : {"data.csv", "truth.csv", "meta.json", "data.csv.meta.json",
                           "truth.csv.meta.json"})
    CHECK(fs::exists(fs::path(gen) / name));

  const Eigen::MatrixXd data = dagdist::load_matrix_csv(gen + "/data.csv");
  CHECK(data.rows() == 120);
  CHECK(data.cols() == 4);

  REQUIRE(run("fit --data " + gen + "/data.csv --out " + fit +
              " --lambda inf --samples 8 --max-iters 40 --patience 20 --seed 2") == 0);
  CHECK(fs::exists(fs::path(fit) / "checkpoint.json"));
  CHECK(fs::exists(fs::path(fit) / "meta.json"));

  REQUIRE(run("eval --checkpoint " + fit + "/checkpoint.json --truth " + gen +
              "/truth.csv --out " + eval + " --count 20 --seed 3") == 0);
  for (const char* name : {"edge_probs.csv", "metrics.json", "metrics.csv"})
    CHECK(fs::exists(fs::path(eval) / name));

  const auto metrics = nlohmann::json::parse(slurp(eval + "/metrics.json"));
  CHECK(metrics.contains("brier"));
  CHECK(metrics.contains("expected_shd"));
  CHECK(metrics.contains("expected_f1"));
  CHECK(metrics.contains("auroc"));

  REQUIRE(run("project --in " + gen + "/truth.csv --out " + prj + " --lambda 1.5") == 0);
  CHECK(fs::exists(fs::path(prj) / "projected.csv"));
  const auto report = nlohmann::json::parse(slurp(prj + "/projection.json"));
  CHECK(report["acyclic"].get<bool>());
  CHECK(report["l1_norm"].get<double>() <= 1.5 + 1e-9);
}

TEST_CASE("eval without a truth file still succeeds") {
  TempDir tmp;
  REQUIRE(run("generate --out " + tmp.dir("g") + " --p 3 --edges 2 --n 60 --seed 1") == 0);
  REQUIRE(run("fit --data " + tmp.dir("g") + "/data.csv --out " + tmp.dir("f") +
              " --lambda inf --samples 5 --max-iters 20 --seed 1") == 0);
  CHECK(run("eval --checkpoint " + tmp.dir("f") + "/checkpoint.json --out " + tmp.dir("e") +
            " --count 10") == 0);
  const auto metrics = nlohmann::json::parse(slurp(tmp.dir("e") + "/metrics.json"));
  CHECK(metrics.contains("metrics_skipped"));
  CHECK_FALSE(metrics.contains("brier"));
}

TEST_CASE("equal seeds give identical bytes, different seeds differ") {
  TempDir tmp;
  const std::string args = " --p 4 --edges 4 --n 50 ";
  REQUIRE(run("generate --out " + tmp.dir("a") + args + "--seed 11") == 0);
  REQUIRE(run("generate --out " + tmp.dir("b") + args + "--seed 11") == 0);
  REQUIRE(run("generate --out " + tmp.dir("c") + args + "--seed 12") == 0);
  CHECK(slurp(tmp.dir("a") + "/data.csv") == slurp(tmp.dir("b") + "/data.csv"));
  CHECK(slurp(tmp.dir("a") + "/data.csv") != slurp(tmp.dir("c") + "/data.csv"));

  const std::string fit_args = "/data.csv --lambda 1.0 --samples 6 --max-iters 25 --seed 4";
  REQUIRE(run("fit --data " + tmp.dir("a") + fit_args + " --out " + tmp.dir("fa")) == 0);
  REQUIRE(run("fit --data " + tmp.dir("b") + fit_args + " --out " + tmp.dir("fb")) == 0);
  CHECK(slurp(tmp.dir("fa") + "/checkpoint.json") == slurp(tmp.dir("fb") + "/checkpoint.json"));
}

TEST_CASE("lambda selection writes the score table") {
  TempDir tmp;
  REQUIRE(run("generate --out " + tmp.dir("g") + " --p 3 --edges 3 --n 80 --seed 6") == 0);
  REQUIRE(run("fit --data " + tmp.dir("g") + "/data.csv --out " + tmp.dir("f") +
              " --lambda-grid 0.5,2.0 --grid-samples 10 --samples 5 --max-iters 20 "
              "--patience 10 --seed 6") == 0);
  const std::string table = slurp(tmp.dir("f") + "/lambda_scores.csv");
  CHECK(table.find("lambda,validation_loglik,selected") == 0);
  CHECK(table.find(",1\n") != std::string::npos);  // one row is marked selected

  const auto meta = nlohmann::json::parse(slurp(tmp.dir("f") + "/meta.json"));
  CHECK(meta["selection"]["grid"].size() == 2);
}

TEST_CASE("sweep aggregates per-run metrics into one table") {
  TempDir tmp;
  REQUIRE(run("sweep --out " + tmp.dir("s") + " --seeds 0,1 --n-values 40 --lambdas inf"
              " --p 3 --edges 2 --samples 5 --max-iters 15 --patience 10 --count 10") == 0);
  const std::string table = slurp(tmp.dir("s") + "/sweep.csv");
  CHECK(table.find("seed,n,lambda,") == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 3);  // header plus two rows
  CHECK(fs::exists(fs::path(tmp.dir("s")) / "runs/s0_n40_linf/metrics.json"));
  CHECK(fs::exists(fs::path(tmp.dir("s")) / "runs/s1_n40_linf/checkpoint.json"));
}

TEST_CASE("nonlinear mode runs end to end") {
  TempDir tmp;
  REQUIRE(run("generate --out " + tmp.dir("g") + " --p 3 --edges 2 --n 60 --seed 8"
              " --mode nonlinear --hidden 4") == 0);
  REQUIRE(run("fit --data " + tmp.dir("g") + "/data.csv --out " + tmp.dir("f") +
              " --mode nonlinear --hidden 4 --lambda inf --samples 5 --max-iters 15 --seed 8") ==
          0);
  const auto ckpt = nlohmann::json::parse(slurp(tmp.dir("f") + "/checkpoint.json"));
  CHECK(ckpt["mode"] == "nonlinear");
  REQUIRE(run("eval --checkpoint " + tmp.dir("f") + "/checkpoint.json --truth " +
              tmp.dir("g") + "/truth.csv --out " + tmp.dir("e") + " --count 10") == 0);
  CHECK(fs::exists(fs::path(tmp.dir("e")) / "edge_probs.csv"));
}

TEST_CASE("a config file can stand in for flags") {
  TempDir tmp;
  std::ofstream ini(tmp.dir("run.ini"));
  ini << "out=" << tmp.dir("g") << "\np=5\nedges=4\nn=30\nseed=2\n";
  ini.close();
  REQUIRE(run("generate --config " + tmp.dir("run.ini")) == 0);
  const Eigen::MatrixXd data = dagdist::load_matrix_csv(tmp.dir("g") + "/data.csv");
  CHECK(data.cols() == 5);
  CHECK(data.rows() == 30);
}
