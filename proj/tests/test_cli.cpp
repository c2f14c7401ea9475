#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "edgepipe/data.hpp"
#include "edgepipe/errors.hpp"

namespace fs = std::filesystem;
using edgepipe::cli::run_cli;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("edgepipe_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("settings: defaults, overrides, unknown keys") {
  edgepipe::cli::Settings s;
  CHECK(s.number("constants.L") == 1.908);
  CHECK(s.number("protocol.alpha") == 1e-4);
  CHECK_FALSE(s.has("run.seed"));
  s.assign("run.seed = 42");
  CHECK(s.unsigned_integer("run.seed") == 42);
  s.assign("sweep.n_o=0, 200 1000");
  CHECK(s.numbers("sweep.n_o") == std::vector<double>{0, 200, 1000});
  CHECK_THROWS_WITH_AS(s.assign("protocol.nc=3"), doctest::Contains("protocol.n_c"),
                       edgepipe::ConfigError);
  CHECK_THROWS_AS(s.assign("no_equals_sign"), edgepipe::ConfigError);
  s.assign("protocol.tau_p=fast");
  CHECK_THROWS_WITH_AS(s.number("protocol.tau_p"), doctest::Contains("tau_p"),
                       edgepipe::ConfigError);
}

TEST_CASE("settings: INI round trip") {
  TempDir dir("ini");
  edgepipe::cli::Settings a;
  a.assign("sweep.n_c=500 1032");
  a.assign("data.source=synthetic");
  a.assign("run.seed=7");
  std::ofstream(dir.path / "a.ini") << a.to_ini();
  edgepipe::cli::Settings b;
  b.load_ini(dir.path / "a.ini");
  CHECK(b.entries() == a.entries());

  std::ofstream(dir.path / "bad.ini") << "[protocol]\nbogus = 1\n";
  CHECK_THROWS_AS(b.load_ini(dir.path / "bad.ini"), edgepipe::ConfigError);
}

TEST_CASE("schedule command mirrors the timeline examples") {
  TempDir dir("schedule");
  const auto r = cli({"schedule", "--set", "protocol.n_c=1032", "--set", "sweep.n_o=0 1000",
                      "--out", dir.path.string()});
  REQUIRE(r.code == 0);
  const auto rows = lines(dir.path / "schedule.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "n_c,n_o,B_d,B,n_p,n_l,tau_l,regime,delivered_fraction");
  CHECK(rows[1] == "1032,0,18,18,1032,9288,9288,full,1");
  CHECK(rows[2].rfind("1032,1000,18,13,2032,0,0,partial,", 0) == 0);
  CHECK(fs::exists(dir.path / "manifest.json"));
  CHECK(fs::exists(dir.path / "resolved.ini"));
}

TEST_CASE("bound-curve: single block size gives a single row") {
  TempDir dir("single");
  const auto r = cli({"bound-curve", "--set", "protocol.n_c=4644", "--out", dir.path.string()});
  REQUIRE(r.code == 0);
  const auto rows = lines(dir.path / "bound_curve.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "n_c,n_o,bound,regime,is_boundary,is_optimum");
  CHECK(rows[1].rfind("4644,1000,", 0) == 0);
  CHECK(rows[1].substr(rows[1].size() - 2) == ",1");
}

TEST_CASE("optimize: without overhead the optimum delivers everything") {
  TempDir dir("opt");
  const auto r = cli({"optimize", "--set", "protocol.n_o=0", "--out", dir.path.string()});
  REQUIRE(r.code == 0);
  const auto rows = lines(dir.path / "optimum.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].find(",full,") != std::string::npos);
  CHECK(r.out.find("(full)") != std::string::npos);
}

TEST_CASE("exit codes") {
  TempDir dir("codes");
  const std::string out = dir.path.string();
  CHECK(cli({"reproduce", "fig5", "--out", out}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"--help"}).code == 0);

  const auto no_seed = cli({"simulate", "--set", "data.source=synthetic", "--out", out});
  CHECK(no_seed.code == 2);
  CHECK(no_seed.err.find("seed") != std::string::npos);

  CHECK(cli({"schedule", "--set", "protocol.bogus=1", "--out", out}).code == 2);
  CHECK(cli({"schedule", "--set", "protocol.n_c=20000", "--out", out}).code == 2);

  const auto missing = cli({"simulate", "--seed", "1", "--set", "data.source=/nonexistent/x.csv",
                            "--out", out});
  CHECK(missing.code == 3);

  const auto contraction =
      cli({"bound-curve", "--set", "constants.L=1", "--set", "constants.c=1", "--set",
           "constants.M_G=0.1", "--set", "protocol.alpha=5", "--out", out});
  CHECK(contraction.code == 4);
  CHECK(contraction.err.find("contraction") != std::string::npos);
}

TEST_CASE("reproduce leaves a failure marker") {
  TempDir dir("fail");
  const auto r = cli({"reproduce", "fig4", "--seed", "1", "--out", dir.path.string()});
  CHECK(r.code == 2);
  CHECK(fs::exists(dir.path / "FAILED"));
  CHECK(slurp(dir.path / "FAILED").find("data.source") != std::string::npos);
}

TEST_CASE("simulate: re-running from the manifest is byte-identical") {
  TempDir dir("sim");
  const auto a = dir.path / "a";
  const auto b = dir.path / "b";
  const auto c = dir.path / "c";
  const std::vector<std::string> base = {
      "simulate",  "--seed",          "3",   "--runs",         "4",
      "--set",     "data.source=synthetic", "--set", "data.synthetic_N=600",
      "--set",     "sweep.n_c=50 120", "--set", "protocol.n_o=20"};
  auto args = base;
  args.insert(args.end(), {"--out", a.string()});
  REQUIRE(cli(args).code == 0);
  REQUIRE(cli({"simulate", "--config", (a / "resolved.ini").string(), "--out", b.string()})
              .code == 0);
  args = base;
  args.insert(args.end(), {"--threads", "3", "--out", c.string()});
  REQUIRE(cli(args).code == 0);

  for (const auto* name : {"summary.csv", "trace_no20_nc50.csv", "trace_no20_nc120.csv"}) {
    CHECK(slurp(a / name) == slurp(b / name));
    CHECK(slurp(a / name) == slurp(c / name));
  }
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(lines(a / "summary.csv").size() == 3);
}

TEST_CASE("commands read CSV data without touching it") {
  TempDir dir("csv");
  const auto synth = edgepipe::synthesize(edgepipe::SyntheticSpec{300, 3, 0.5, std::nullopt}, 1);
  const auto csv = dir.path / "data.csv";
  edgepipe::write_csv(csv, synth.data, {"a", "b", "c"}, "y");
  const auto before = slurp(csv);
  const auto time_before = fs::last_write_time(csv);
  const auto r = cli({"simulate", "--seed", "1", "--runs", "2", "--set",
                      "data.source=" + csv.string(), "--set", "sweep.n_c=90", "--set",
                      "protocol.n_o=10", "--out", (dir.path / "out").string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(csv) == before);
  CHECK(fs::last_write_time(csv) == time_before);
  CHECK(slurp(dir.path / "out" / "manifest.json").find("\"train_rows\": 270") !=
        std::string::npos);
}

TEST_CASE("reproduce fig3 reports its shape checks") {
  TempDir dir("fig3");
  const auto r = cli({"reproduce", "fig3", "--out", dir.path.string()});
  REQUIRE(r.code == 0);
  const auto summary = slurp(dir.path / "summary.txt");
  CHECK(summary.find("FAIL") == std::string::npos);
  CHECK(lines(dir.path / "optimum.csv").size() == 5);
}
