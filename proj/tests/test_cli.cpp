#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = FPIRM_CLI;
const std::string kSrc = FPIRM_SOURCE_DIR;

/// Runs the CLI through the shell with `prefix` (environment assignments)
/// and returns its exit status. Output goes to files under cli_out/.
int cli(const std::string& args, const std::string& prefix = "", const std::string& stdoutFile = "cli_out/stdout",
        const std::string& stderrFile = "cli_out/stderr") {
  fs::create_directories("cli_out");
  const std::string cmd = prefix + " " + kCli + " " + args + " >" + stdoutFile + " 2>" + stderrFile;
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("run writes a deterministic trace") {
  REQUIRE(cli("run add5:8 --seed 3 --out cli_out/a.json") == 0);
  REQUIRE(cli("run add5:8 --seed 3 --out cli_out/b.json") == 0);
  const auto a = slurp("cli_out/a.json");
  CHECK(a == slurp("cli_out/b.json"));
  const auto j = nlohmann::json::parse(a);
  CHECK(j["ledger"]["transverseReads"] == 8);
  CHECK(j["seed"] == 3);
  CHECK(j["peeks"].size() == 1);
  REQUIRE(cli("run add5:8 --seed 4 --out cli_out/c.json") == 0);
  CHECK(slurp("cli_out/c.json") != a);
}

TEST_CASE("run accepts a program file and prints to stdout by default") {
  std::ofstream("cli_out/prog.txt") << "poke 10 8 1 2\npoke 11 8 3 4\nadd5 12 8 0 8 10 11\npeek 12 8\n";
  REQUIRE(cli("run cli_out/prog.txt") == 0);
  const auto j = nlohmann::json::parse(slurp("cli_out/stdout"));
  CHECK(j["peeks"][0]["lanes"][0] == 4);
  CHECK(j["peeks"][0]["lanes"][1] == 6);
}

TEST_CASE("run rejects a missing program") {
  CHECK(cli("run no_such_program.txt") != 0);
  CHECK(slurp("cli_out/stderr").find("no_such_program.txt") != std::string::npos);
  std::ofstream("cli_out/bad.txt") << "poke 10 8 1\nwarp 9\n";
  CHECK(cli("run cli_out/bad.txt") == 1);
  CHECK(slurp("cli_out/stderr").find("line 2") != std::string::npos);
}

TEST_CASE("verify exits zero on success and one under mutation") {
  CHECK(cli("verify --suite int --trials 2 --out cli_out/v.json") == 0);
  const auto j = nlohmann::json::parse(slurp("cli_out/v.json"));
  CHECK(j["passed"] == true);
  CHECK(cli("verify --suite int --trials 2 --mutate --out cli_out/m.json") == 1);
  CHECK(slurp("cli_out/stderr").find("reproducer") != std::string::npos);
  CHECK(cli("verify --suite nonsense") == 1);
}

TEST_CASE("bench writes JSON and CSV reports") {
  fs::remove_all("cli_out/bench");
  REQUIRE(cli("bench --net lenet5 --mode ternary --out cli_out/bench") == 0);
  REQUIRE(fs::exists("cli_out/bench/lenet5_ternary.json"));
  REQUIRE(fs::exists("cli_out/bench/lenet5_ternary.csv"));
  const auto j = nlohmann::json::parse(slurp("cli_out/bench/lenet5_ternary.json"));
  CHECK(j["mode"] == "ternary");
  CHECK(j["fps"].get<double>() > 0);
  CHECK(slurp("cli_out/bench/lenet5_ternary.csv").rfind("index,name,kind", 0) == 0);

  REQUIRE(cli("bench --net " + kSrc + "/configs/nets/one_conv.json --parallel 2 --out cli_out/bench") == 0);
  const auto one = nlohmann::json::parse(slurp("cli_out/bench/one_conv_fp32.json"));
  CHECK(one["layers"][0]["rowBatches"] == 6);
  CHECK(one["settings"]["parallelDBCs"] == 2);
}

TEST_CASE("bench reports unsupported layers by index") {
  CHECK(cli("bench --net " + kSrc + "/configs/nets/unsupported.json --out cli_out/bench") == 1);
  const auto err = slurp("cli_out/stderr");
  CHECK(err.find("UnsupportedLayer") != std::string::npos);
  CHECK(err.find("layer 1") != std::string::npos);
}

TEST_CASE("environment variables stand in for options") {
  REQUIRE(cli("run fpmul --out cli_out/flag.json --seed 11") == 0);
  REQUIRE(cli("run fpmul", "FPIRM_SEED=11 FPIRM_OUT=cli_out/env.json") == 0);
  CHECK(slurp("cli_out/flag.json") == slurp("cli_out/env.json"));
  REQUIRE(cli("bench --net lenet5 --out cli_out/envbench", "FPIRM_MODE=integer") == 0);
  CHECK(fs::exists("cli_out/envbench/lenet5_integer.json"));
  REQUIRE(cli("bench --net lenet5 --out cli_out/envbench", "FPIRM_CONFIG=" + kSrc + "/configs/fpirm.json") == 0);
  const auto j = nlohmann::json::parse(slurp("cli_out/envbench/lenet5_fp32.json"));
  CHECK(j["settings"]["parallelDBCs"] == 64);
  CHECK(j["settings"]["splitTerms"] == true);
}

TEST_CASE("bad configs are rejected") {
  std::ofstream("cli_out/bad_config.json") << R"({"device": {"domains": 24}})";
  CHECK(cli("--config cli_out/bad_config.json run add5") == 1);
  std::ofstream("cli_out/bad_section.json") << R"({"devices": {}})";
  CHECK(cli("--config cli_out/bad_section.json run add5") == 1);
}

TEST_CASE("report covers every network and mode with a calibration section") {
  REQUIRE(cli("report --config " + kSrc + "/configs/fpirm.json --out cli_out/report") == 0);
  const auto j = nlohmann::json::parse(slurp("cli_out/report/report.json"));
  CHECK(j["runs"].size() == 9);
  CHECK(j["calibration"]["referenceFps"] == 32075);
  CHECK(j["calibration"]["energyOrdered"] == true);
  const auto csv = slurp("cli_out/report/report.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
}
