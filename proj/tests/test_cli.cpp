#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "json.hpp"
#include "skeld/io.hpp"

using namespace skeld;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
  const char* p = std::getenv("SKELD_CLI");
  REQUIRE_MESSAGE(p != nullptr, "SKELD_CLI must point at the CLI binary");
  return p;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("skeld_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  fs::path log = dir / "cli_output.txt";
  std::string cmd = cli_path() + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

json base_config() {
  return json{
      {"name", "cli-test"},
      {"experiment", "solve-skeleton"},
      {"seed", 1},
      {"nonlinearity", {{"kind", "power"}, {"m", 2.0}}},
      {"grid", {{"d", 1}, {"n", 64}}},
      {"initial",
       {{"profile", "cosine-bump"}, {"base", 1.0}, {"amplitude", 0.3},
        {"mode", 1}}},
      {"control", {{"kind", "zero"}}},
      {"solver", {{"T", 0.01}, {"dt", 1e-4}}},
  };
}

fs::path write_config(const fs::path& dir, const json& cfg,
                      const std::string& name = "config.json") {
  fs::path p = dir / name;
  std::ofstream(p) << cfg.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("run + report succeed and write the expected artifacts") {
  TempDir td;
  fs::path cfg = write_config(td.path, base_config());
  fs::path out = td.path / "run";
  RunResult r = run_cli("run " + cfg.string() + " --out " + out.string(),
                        td.path);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(out / "run.json"));
  CHECK(fs::exists(out / "diagnostics.csv"));
  CHECK(fs::exists(out / "final.csv"));
  // diagnostics header shape
  std::string diag = slurp(out / "diagnostics.csv");
  CHECK(diag.rfind("t,mass,entropy,dissipation_cum,control_energy_cum,dt",
                   0) == 0);
  CHECK(diag.find("\r") == std::string::npos);  // LF only

  RunResult rep = run_cli("report " + out.string(), td.path);
  CHECK(rep.exit_code == 0);
  CHECK(fs::exists(out / "summary.json"));
  json summary = json::parse(slurp(out / "summary.json"));
  CHECK(summary["mass_drift_rel"].get<double>() <= 1e-12);
}

TEST_CASE("identical scenario and seed give byte-identical outputs") {
  TempDir td;
  fs::path cfg = write_config(td.path, base_config());
  fs::path o1 = td.path / "r1";
  fs::path o2 = td.path / "r2";
  REQUIRE(run_cli("run " + cfg.string() + " --out " + o1.string(), td.path)
              .exit_code == 0);
  REQUIRE(run_cli("run " + cfg.string() + " --out " + o2.string(), td.path)
              .exit_code == 0);
  CHECK(slurp(o1 / "diagnostics.csv") == slurp(o2 / "diagnostics.csv"));
  CHECK(slurp(o1 / "final.csv") == slurp(o2 / "final.csv"));
}

TEST_CASE("invalid configs exit with code 2 and name the offending key") {
  TempDir td;
  SUBCASE("unknown key") {
    json cfg = base_config();
    cfg["solver"]["stepsize"] = 0.1;
    fs::path p = write_config(td.path, cfg);
    RunResult r = run_cli("run " + p.string(), td.path);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("stepsize") != std::string::npos);
  }
  SUBCASE("negative initial data") {
    json cfg = base_config();
    cfg["initial"]["amplitude"] = 2.0;  // base 1.0 - 2.0 < 0
    fs::path p = write_config(td.path, cfg);
    RunResult r = run_cli("run " + p.string(), td.path);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("initial") != std::string::npos);
  }
  SUBCASE("bad nonlinearity") {
    json cfg = base_config();
    cfg["nonlinearity"]["m"] = 0.2;
    fs::path p = write_config(td.path, cfg);
    RunResult r = run_cli("run " + p.string(), td.path);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("nonlinearity") != std::string::npos);
  }
  SUBCASE("missing config file") {
    RunResult r = run_cli("run " + (td.path / "nope.json").string(), td.path);
    CHECK(r.exit_code == 2);
  }
}

TEST_CASE("report on a directory without artifacts exits with code 5") {
  TempDir td;
  fs::path empty = td.path / "empty";
  fs::create_directories(empty);
  RunResult r = run_cli("report " + empty.string(), td.path);
  CHECK(r.exit_code == 5);
}

TEST_CASE("spde and assumption experiments run end to end") {
  TempDir td;
  SUBCASE("simulate-spde") {
    json cfg = base_config();
    cfg["experiment"] = "simulate-spde";
    cfg["nonlinearity"]["m"] = 1.0;
    cfg["noise"] = {{"K", 2}, {"epsilon", 0.05}, {"eta", 0.1}};
    fs::path p = write_config(td.path, cfg);
    fs::path out = td.path / "spde";
    RunResult r = run_cli("run " + p.string() + " --out " + out.string(),
                          td.path);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out / "path_stats.csv"));
    CHECK(run_cli("report " + out.string(), td.path).exit_code == 0);
  }
  SUBCASE("check-assumptions pass and fail") {
    json cfg = base_config();
    cfg["experiment"] = "check-assumptions";
    cfg["assumptions"] = {{"M", 10.0}};
    fs::path p = write_config(td.path, cfg);
    fs::path out = td.path / "ass";
    REQUIRE(run_cli("run " + p.string() + " --out " + out.string(), td.path)
                .exit_code == 0);
    json rep = json::parse(slurp(out / "assumptions.json"));
    REQUIRE(run_cli("report " + out.string(), td.path).exit_code == 0);
    json summary = json::parse(slurp(out / "summary.json"));
    CHECK(summary["all_pass"].get<bool>());
  }
}

TEST_CASE("snapshot files round trip exactly") {
  TempDir td;
  Grid g = Grid::make(2, 16);
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.v[i] = 0.1 + 1.0 / (1.0 + static_cast<double>(i));
  }
  fs::path p = td.path / "snap.csv";
  write_snapshot(p.string(), f, 0.375);
  auto [back, t] = read_snapshot(p.string());
  CHECK(t == 0.375);
  CHECK(back.grid == g);
  CHECK(back.v == f.v);  // shortest round-trip formatting is exact
}

TEST_CASE("spectral control files round trip exactly") {
  TempDir td;
  Grid g = Grid::make(1, 64);
  SpectralBasis bs(1, 64);
  ControlField cf = ControlField::from_spectral(
      g, bs, {0.0, 0.5, 1.0},
      {{0.25, -1.0 / 3.0}, {0.5, 0.125}, {-0.7, 2.0}});
  fs::path p = td.path / "control.csv";
  write_spectral_control(p.string(), cf);
  ControlField back = read_spectral_control(p.string(), g);
  CHECK(back.times() == cf.times());
  CHECK(back.coeffs() == cf.coeffs());
}

TEST_CASE("number formatting is locale independent and minimal") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(-0.0078125) == "-0.0078125");
  // round trip through parse is identical
  double v = 0.1 + 0.2;
  CHECK(std::stod(format_number(v)) == v);
}
