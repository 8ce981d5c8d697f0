// fpirm: run microprograms, verification suites and workload benchmarks.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fpirm/cost_model.hpp"
#include "fpirm/errors.hpp"
#include "fpirm/program.hpp"
#include "suites.hpp"

namespace fs = std::filesystem;
using namespace fpirm;

namespace {

constexpr double kReferenceLenetTernaryFps = 32075;

/// Everything a config file may carry. Missing sections take defaults.
struct Settings {
  DeviceConfig device;
  cost::DeviceParams params = cost::DeviceParams::defaults();
  int parallelDBCs = 1;
  bool splitTerms = false;
  std::string source = "built-in defaults";
};

Settings loadSettings(const std::string& path) {
  Settings s;
  if (path.empty()) return s;
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, path + ": " + e.what());
  }
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "device" && it.key() != "params" && it.key() != "workload" && it.key() != "comment")
      throw Error(ErrorKind::Config, path + ": unknown section '" + it.key() + "'");
  if (j.contains("device")) s.device = DeviceConfig::fromJson(j.at("device"));
  if (j.contains("params")) s.params = cost::DeviceParams::fromJson(j.at("params"));
  if (j.contains("workload")) {
    const auto& w = j.at("workload");
    for (auto it = w.begin(); it != w.end(); ++it)
      if (it.key() != "parallelDBCs" && it.key() != "splitTerms" && it.key() != "comment")
        throw Error(ErrorKind::Config, path + ": unknown workload key '" + it.key() + "'");
    s.parallelDBCs = w.value("parallelDBCs", s.parallelDBCs);
    s.splitTerms = w.value("splitTerms", s.splitTerms);
  }
  s.source = path;
  return s;
}

void writeText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::Config, "cannot write " + path);
  out << text;
}

std::string dumpJson(const nlohmann::json& j) { return j.dump(2) + "\n"; }

cost::Network loadNetwork(const std::string& net) {
  for (const auto& n : cost::Network::builtinNames())
    if (n == net) return cost::Network::builtin(net);
  return cost::Network::load(net);
}

nlohmann::json settingsJson(const Settings& s) {
  return {{"config", s.source},
          {"device", s.device.toJson()},
          {"params", s.params.toJson()},
          {"parallelDBCs", s.parallelDBCs},
          {"splitTerms", s.splitTerms}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Racetrack CIM simulator: microprograms, verification and workload cost model"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string configPath;
  std::uint64_t seed = 0;
  long trials = 64;
  std::string out;
  std::string mode = "fp32";
  int verbosity = 0;
  app.add_option("--config", configPath, "JSON config with device, params and workload sections")
      ->envname("FPIRM_CONFIG")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "seed for generated data")->envname("FPIRM_SEED");
  app.add_option("--trials", trials, "trials per randomized check")->envname("FPIRM_TRIALS")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output file or directory")->envname("FPIRM_OUT");
  app.add_option("--mode", mode, "ternary, integer or fp32")->envname("FPIRM_MODE");
  app.add_flag("-v,--verbose", verbosity, "progress on stderr");

  auto* run = app.add_subcommand("run", "execute a microprogram and write its JSON trace");
  std::string program;
  run->add_option("program", program, "program file, or a demo: add5[:w], multiply[:w], fpmul")->required();

  auto* verify = app.add_subcommand("verify", "run oracle-equivalence suites");
  std::string suite = "all";
  bool mutate = false;
  int workers = 1;
  verify->add_option("--suite", suite, "device, int, fp, kernels or all");
  verify->add_flag("--mutate", mutate, "corrupt one result per check to prove failures are caught");
  verify->add_option("--workers", workers, "threads sharing the trials")->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "cost a network and write report JSON and layer CSV");
  std::string net = "lenet5";
  std::optional<int> parallel;
  std::optional<bool> split;
  std::string paramsPath;
  bench->add_option("--net", net, "lenet5, alexnet, vgg16 or a network JSON file");
  bench->add_option("--params", paramsPath, "device parameter JSON, overriding the config")->check(CLI::ExistingFile);
  bench->add_option("--parallel", parallel, "CIM units working concurrently")->check(CLI::PositiveNumber);
  bench->add_option("--split-terms", split, "let idle units share the terms of one output row");

  auto* report = app.add_subcommand("report", "cost every built-in network in every mode, with calibration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    Settings s = loadSettings(configPath);

    if (*run) {
      std::string text;
      if (fs::exists(program)) {
        std::ifstream in(program);
        text.assign(std::istreambuf_iterator<char>(in), {});
      } else if (Program::isDemo(program)) {
        text = Program::demo(program, seed);
      } else {
        std::cerr << "fpirm run: no such program file or demo: " << program << "\n" << run->help();
        return 2;
      }
      const Program p = Program::parse(text);
      Machine m(s.device, true);
      const auto r = p.execute(m);
      auto j = p.traceJson(m, r);
      j["program"] = program;
      j["seed"] = seed;
      writeText(out, dumpJson(j));
      if (verbosity) std::cerr << "cycles " << m.ledger().cycles << "\n";
      return 0;
    }

    if (*verify) {
      verify::Options o;
      o.seed = seed;
      o.trials = trials;
      o.mutate = mutate;
      o.workers = workers;
      o.device = s.device;
      const auto rep = verify::runSuite(suite, o);
      writeText(out, dumpJson(rep.toJson()));
      for (const auto& c : rep.checks) {
        if (verbosity || !c.passed())
          std::cerr << (c.passed() ? "PASS " : "FAIL ") << c.name << " " << c.cases - c.failures << "/"
                    << c.cases << "\n";
        if (!c.passed()) std::cerr << "  reproducer: " << c.reproducer.dump() << "\n";
      }
      return rep.passed() ? 0 : 1;
    }

    if (*bench) {
      if (!paramsPath.empty()) s.params = cost::DeviceParams::load(paramsPath);
      if (parallel) s.parallelDBCs = *parallel;
      if (split) s.splitTerms = *split;
      const auto network = loadNetwork(net);
      const auto m = cost::modeFromString(mode);
      cost::UnitCosts units(s.device);
      const auto rep = cost::mapWorkload(network, m, s.parallelDBCs, s.params, units, s.splitTerms);
      auto j = rep.toJson();
      j["settings"] = settingsJson(s);
      const fs::path dir = out.empty() ? fs::path("bench") : fs::path(out);
      const std::string stem = network.name + "_" + cost::toString(m);
      writeText((dir / (stem + ".json")).string(), dumpJson(j));
      writeText((dir / (stem + ".csv")).string(), rep.layerCsv());
      std::cout << stem << ": " << rep.fps << " FPS, " << rep.gflops << " GFLOPS, " << rep.powerW << " W -> "
                << (dir / (stem + ".json")).string() << "\n";
      return 0;
    }

    if (*report) {
      cost::UnitCosts units(s.device);
      nlohmann::json j;
      j["settings"] = settingsJson(s);
      std::string csv = "network,mode,latencyNs,energyPerInferencePJ,fps,gflops,powerW,fpsPerW,gflopsPerW\n";
      auto& runs = j["runs"] = nlohmann::json::array();
      bool ordered = true;
      double lenetTernaryFps = 0;
      for (const auto& name : cost::Network::builtinNames()) {
        const auto network = cost::Network::builtin(name);
        double previous = -1;
        for (auto m : {cost::Mode::Ternary, cost::Mode::Integer, cost::Mode::Fp32}) {
          const auto r = cost::mapWorkload(network, m, s.parallelDBCs, s.params, units, s.splitTerms);
          runs.push_back({{"network", name}, {"mode", cost::toString(m)}, {"latencyNs", r.latencyNs},
                          {"energyPerInferencePJ", r.energyPerInferencePJ()}, {"fps", r.fps},
                          {"gflops", r.gflops}, {"powerW", r.powerW}, {"fpsPerW", r.fpsPerW},
                          {"gflopsPerW", r.gflopsPerW}});
          char line[512];
          std::snprintf(line, sizeof line, "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", name.c_str(),
                        cost::toString(m), r.latencyNs, r.energyPerInferencePJ(), r.fps, r.gflops, r.powerW,
                        r.fpsPerW, r.gflopsPerW);
          csv += line;
          if (r.energyPerInferencePJ() < previous) ordered = false;
          previous = r.energyPerInferencePJ();
          if (name == "lenet5" && m == cost::Mode::Ternary) lenetTernaryFps = r.fps;
        }
      }
      j["calibration"] = {{"lenet5TernaryFps", lenetTernaryFps},
                          {"referenceFps", kReferenceLenetTernaryFps},
                          {"ratio", lenetTernaryFps / kReferenceLenetTernaryFps},
                          {"withinFactorTwo", lenetTernaryFps >= kReferenceLenetTernaryFps / 2 &&
                                                  lenetTernaryFps <= kReferenceLenetTernaryFps * 2},
                          {"energyOrdered", ordered}};
      const fs::path dir = out.empty() ? fs::path("report") : fs::path(out);
      writeText((dir / "report.json").string(), dumpJson(j));
      writeText((dir / "report.csv").string(), csv);
      std::cout << "lenet5 ternary " << lenetTernaryFps << " FPS (reference " << kReferenceLenetTernaryFps
                << "), energy ordering " << (ordered ? "holds" : "violated") << " -> "
                << (dir / "report.json").string() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "fpirm: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fpirm: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
