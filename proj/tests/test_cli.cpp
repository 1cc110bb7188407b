#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "stableweb/cli.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"stableweb"};
  argv.insert(argv.end(), args.begin(), args.end());
  return stableweb::cli::cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("stableweb_test_" + name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const char* kSmallConfig = R"({
  "alpha": 1.5,
  "tail_constant": 0.25,
  "x_max": 64,
  "scale_n": 512,
  "sites": 4096,
  "horizon": 1.5,
  "seed": 91,
  "replicas": 2,
  "retention": "full",
  "start": {"type": "theta_grid", "theta": 0.5, "x_half_width": 2.0,
            "t_lo": 0.0, "t_hi": 1.0, "time_offset": 0.105}
})";

}  // namespace

TEST_CASE("unknown subcommands exit with the usage code") {
  CHECK(run_cli({"frobnicate"}) == 2);
  CHECK(run_cli({}) == 2);
}

TEST_CASE("simulate is byte-reproducible for a fixed config and seed") {
  TempDir dir("sim");
  write_file(dir.path / "cfg.json", kSmallConfig);
  auto out1 = (dir.path / "a").string();
  auto out2 = (dir.path / "b").string();
  std::string cfg = (dir.path / "cfg.json").string();
  REQUIRE(run_cli({"--config", cfg.c_str(), "--out", out1.c_str(),
                   "simulate"}) == 0);
  REQUIRE(run_cli({"--config", cfg.c_str(), "--out", out2.c_str(),
                   "simulate"}) == 0);
  std::string p1 = slurp(fs::path(out1) / "paths.ndjson");
  std::string p2 = slurp(fs::path(out2) / "paths.ndjson");
  CHECK(!p1.empty());
  CHECK(p1 == p2);
  CHECK(slurp(fs::path(out1) / "summary.json") ==
        slurp(fs::path(out2) / "summary.json"));

  // a different seed changes the bytes
  auto out3 = (dir.path / "c").string();
  REQUIRE(run_cli({"--config", cfg.c_str(), "--out", out3.c_str(), "--seed",
                   "92", "simulate"}) == 0);
  CHECK(slurp(fs::path(out3) / "paths.ndjson") != p1);
}

TEST_CASE("filter, project and metric work on serialized paths") {
  TempDir dir("ops");
  write_file(dir.path / "cfg.json", kSmallConfig);
  std::string cfg = (dir.path / "cfg.json").string();
  auto out = (dir.path / "run").string();
  REQUIRE(run_cli({"--config", cfg.c_str(), "--out", out.c_str(),
                   "simulate"}) == 0);
  std::string paths = (fs::path(out) / "paths.ndjson").string();

  REQUIRE(run_cli({"--out", out.c_str(), "filter", "--in", paths.c_str(),
                   "--delta", "0.25"}) == 0);
  REQUIRE(fs::exists(fs::path(out) / "filtered.ndjson"));

  REQUIRE(run_cli({"--out", out.c_str(), "project", "--in", paths.c_str(),
                   "--level", "1"}) == 0);
  REQUIRE(fs::exists(fs::path(out) / "projected.ndjson"));

  // metric of a path file against itself is zero
  REQUIRE(run_cli({"--out", out.c_str(), "metric", "--a", paths.c_str(),
                   "--b", paths.c_str()}) == 0);
  std::string csv = slurp(fs::path(out) / "metrics.csv");
  CHECK(csv.find("metric_d,pair,0,") != std::string::npos);
  CHECK(csv.find("metric_rho,pair,0,") != std::string::npos);
}

TEST_CASE("statistical assertions gate the exit code") {
  TempDir dir("assert");
  std::string cfg_text = R"({
    "alpha": 1.5, "tail_constant": 0.25, "x_max": 64,
    "scale_n": 256, "sites": 16384, "horizon": 2.0, "seed": 7,
    "replicas": 4, "retention": "snapshots",
    "sample_times": [0.5, 1.0, 2.0],
    "start": {"type": "full"}
  })";
  write_file(dir.path / "cfg.json", cfg_text);
  std::string cfg = (dir.path / "cfg.json").string();
  auto out = (dir.path / "run").string();

  // an absurd slope target must fail with exit code 4
  CHECK(run_cli({"--config", cfg.c_str(), "--out", out.c_str(), "--assert",
                 "slope=5.0,tol=0.01", "density", "--window", "10.0"}) == 4);
  // a generous tolerance passes
  CHECK(run_cli({"--config", cfg.c_str(), "--out", out.c_str(), "--assert",
                 "slope=-0.6667,tol=0.6", "density", "--window", "10.0"}) == 0);
}

TEST_CASE("thread count never changes the bytes") {
  TempDir dir("threads");
  write_file(dir.path / "cfg.json", kSmallConfig);
  std::string cfg = (dir.path / "cfg.json").string();
  auto o1 = (dir.path / "t1").string();
  auto o2 = (dir.path / "t2").string();
  REQUIRE(run_cli({"--config", cfg.c_str(), "--out", o1.c_str(), "--threads",
                   "1", "simulate"}) == 0);
  REQUIRE(run_cli({"--config", cfg.c_str(), "--out", o2.c_str(), "--threads",
                   "3", "simulate"}) == 0);
  CHECK(slurp(fs::path(o1) / "paths.ndjson") ==
        slurp(fs::path(o2) / "paths.ndjson"));
}

TEST_CASE("validation failures exit with code 2") {
  TempDir dir("bad");
  write_file(dir.path / "cfg.json", R"({"alpha": 3.0})");
  std::string cfg = (dir.path / "cfg.json").string();
  CHECK(run_cli({"--config", cfg.c_str(), "simulate"}) == 2);
  CHECK(run_cli({"simulate"}) == 2);  // missing --config
}
