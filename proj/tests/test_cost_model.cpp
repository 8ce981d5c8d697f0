#include <cmath>
#include <random>

#include "fpirm/cost_model.hpp"
#include "support.hpp"

using namespace fpirm;
using namespace fpirm::cost;
using test::errorOf;

namespace {

CostLedger randomLedger(std::mt19937_64& g) {
  CostLedger l;
  for (int i = 0; i < 40; ++i) l.record(static_cast<EventKind>(g() % 7), 1 + static_cast<int>(g() % 5));
  return l;
}

double independentFlops(const Layer& l) {
  switch (l.kind) {
    case LayerKind::Conv:
      return 2.0 * l.kernel * l.kernel * l.inChannels * l.outChannels * l.outRows() * l.outCols();
    case LayerKind::FullyConnected:
      return 2.0 * l.inChannels * l.rows * l.cols * l.outChannels;
    default:
      return 0;
  }
}

UnitCosts& sharedUnits() {
  static UnitCosts u;
  return u;
}

}  // namespace

TEST_CASE("folding an empty ledger costs nothing") {
  const auto c = foldCosts(CostLedger{}, DeviceParams::defaults());
  CHECK(c.latencyNs == 0);
  CHECK(c.energyPJ == 0);
}

TEST_CASE("a single write costs one access") {
  const auto p = DeviceParams::defaults();
  CostLedger l;
  l.record(EventKind::Write);
  const auto c = foldCosts(l, p);
  CHECK(c.latencyNs == p.tAccess.value);
  CHECK(c.energyPJ == doctest::Approx(p.energyPerWrite.value));
  CHECK(p.energyPerWrite.value == 0.1);
}

TEST_CASE("folding is additive and monotone") {
  std::mt19937_64 g(51);
  const auto p = DeviceParams::defaults();
  for (int i = 0; i < 50; ++i) {
    const auto a = randomLedger(g), b = randomLedger(g);
    const auto ca = foldCosts(a, p), cb = foldCosts(b, p), cab = foldCosts(a + b, p);
    CHECK(cab.latencyNs == doctest::Approx(ca.latencyNs + cb.latencyNs));
    CHECK(cab.energyPJ == doctest::Approx(ca.energyPJ + cb.energyPJ));
    CHECK(cab.latencyNs >= ca.latencyNs);
    CHECK(cab.energyPJ >= ca.energyPJ);
  }
  // With unit times, latency counts cycles.
  const auto l = randomLedger(g);
  CHECK(foldCosts(l, p).latencyNs == static_cast<double>(l.cycles));
}

TEST_CASE("parallel ledgers add energy and take the longest latency") {
  std::mt19937_64 g(52);
  const auto p = DeviceParams::defaults();
  const auto a = randomLedger(g), b = randomLedger(g);
  const auto c = foldCosts(std::vector<CostLedger>{a, b}, p);
  CHECK(c.energyPJ == doctest::Approx(foldCosts(a, p).energyPJ + foldCosts(b, p).energyPJ));
  CHECK(c.latencyNs == std::max(foldCosts(a, p).latencyNs, foldCosts(b, p).latencyNs));
}

TEST_CASE("parameter files are validated") {
  auto p = DeviceParams::defaults();
  CHECK_NOTHROW(p.validate());
  CHECK(DeviceParams::fromJson(p.toJson()).toJson() == p.toJson());
  CHECK(errorOf([] { DeviceParams::fromJson({{"energyPerWarp", {{"value", 1}, {"provenance", "x"}}}}); }) ==
        ErrorKind::Config);
  CHECK(errorOf([] { DeviceParams::fromJson({{"tShift", {{"value", -1}, {"provenance", "x"}}}}); }) ==
        ErrorKind::Config);
  CHECK(errorOf([] { DeviceParams::fromJson({{"tShift", {{"value", 1}, {"provenance", ""}}}}); }) ==
        ErrorKind::Config);
  const auto file = DeviceParams::load(FPIRM_SOURCE_DIR "/configs/fpirm.json");
  CHECK_NOTHROW(file.validate());
}

TEST_CASE("modes round trip through their names") {
  for (auto m : {Mode::Ternary, Mode::Integer, Mode::Fp32}) CHECK((modeFromString(toString(m)) == m));
  CHECK(errorOf([] { modeFromString("bf16"); }) == ErrorKind::Config);
}

TEST_CASE("one conv layer by hand") {
  auto& u = sharedUnits();
  const auto net = Network::load(FPIRM_SOURCE_DIR "/configs/nets/one_conv.json");
  REQUIRE(net.layers.size() == 1);
  const auto& l = net.layers[0];
  CHECK(l.outputs() == 48);
  CHECK(l.termsPerOutput() == 18);
  CHECK(l.flops() == 1728);
  const auto p = DeviceParams::defaults();

  const auto fp = mapWorkload(net, Mode::Fp32, 1, p, u);
  CHECK(fp.layers[0].rowBatches == 6);
  CHECK(fp.layers[0].split == 1);
  const auto row = u.dotRow(Mode::Fp32, 18);
  CHECK(row.lanes == 8);
  CHECK(row.ledger.cycles >= 18 * u.fpMultiply().cycles);
  CHECK(fp.latencyNs == doctest::Approx(6 * foldCosts(row.ledger, p).latencyNs));
  CHECK(fp.dynamicEnergyPJ == doctest::Approx(6 * foldCosts(row.ledger, p).energyPJ));
  CHECK(fp.ledger == row.ledger.scaled(6));
  CHECK(fp.staticEnergyPJ == doctest::Approx(p.cimUnitStaticPower.value * fp.latencyNs * 1e3));
  CHECK(fp.fps == doctest::Approx(1e9 / fp.latencyNs));
  CHECK(fp.gflops == doctest::Approx(1728 / fp.latencyNs));

  CHECK(mapWorkload(net, Mode::Integer, 1, p, u).layers[0].rowBatches == 3);
  CHECK(mapWorkload(net, Mode::Ternary, 1, p, u).layers[0].rowBatches == 2);
}

TEST_CASE("doubling the units at least halves latency and keeps dynamic energy") {
  auto& u = sharedUnits();
  const auto p = DeviceParams::defaults();
  const auto net = Network::load(FPIRM_SOURCE_DIR "/configs/nets/one_conv.json");
  for (auto m : {Mode::Ternary, Mode::Integer, Mode::Fp32}) {
    for (int P : {1, 2, 3}) {
      const auto a = mapWorkload(net, m, P, p, u), b = mapWorkload(net, m, 2 * P, p, u);
      CHECK(b.latencyNs <= a.latencyNs);
      CHECK(b.latencyNs >= a.latencyNs / 2 - 1e-9);
      CHECK(b.dynamicEnergyPJ == doctest::Approx(a.dynamicEnergyPJ));
    }
  }
}

TEST_CASE("energy per inference orders ternary, integer, fp32") {
  auto& u = sharedUnits();
  const auto p = DeviceParams::defaults();
  for (const auto& name : Network::builtinNames()) {
    const auto net = Network::builtin(name);
    const double t = mapWorkload(net, Mode::Ternary, 64, p, u, true).energyPerInferencePJ();
    const double i = mapWorkload(net, Mode::Integer, 64, p, u, true).energyPerInferencePJ();
    const double f = mapWorkload(net, Mode::Fp32, 64, p, u, true).energyPerInferencePJ();
    CHECK(t < i);
    CHECK(i < f);
  }
}

TEST_CASE("layer FLOPs follow the dot-product count") {
  for (const auto& name : Network::builtinNames()) {
    const auto net = Network::builtin(name);
    double total = 0;
    for (const auto& l : net.layers) {
      CHECK(l.flops() == independentFlops(l));
      total += independentFlops(l);
    }
    const auto rep = mapWorkload(net, Mode::Fp32, 1, DeviceParams::defaults(), sharedUnits());
    CHECK(rep.flops == doctest::Approx(total));
  }
  // Published totals for the standard shapes.
  const double vgg = mapWorkload(Network::builtin("vgg16"), Mode::Fp32, 1, DeviceParams::defaults(), sharedUnits()).flops;
  CHECK(vgg == doctest::Approx(30.94e9).epsilon(0.01));
}

TEST_CASE("splitting terms never slows a layer down") {
  auto& u = sharedUnits();
  const auto p = DeviceParams::defaults();
  const auto net = Network::builtin("lenet5");
  for (int P : {1, 8, 64}) {
    const auto plain = mapWorkload(net, Mode::Ternary, P, p, u);
    const auto split = mapWorkload(net, Mode::Ternary, P, p, u, true);
    CHECK(split.latencyNs <= plain.latencyNs);
    if (P == 1)
      for (const auto& l : split.layers) CHECK(l.split == 1);
  }
}

TEST_CASE("unsupported layers name their index") {
  try {
    Network::load(FPIRM_SOURCE_DIR "/configs/nets/unsupported.json");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::UnsupportedLayer));
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
  CHECK(errorOf([] {
          Network::fromJson({{"name", "x"},
                             {"input", {{"channels", 1}, {"rows", 4}, {"cols", 4}}},
                             {"layers", {{{"type", "conv"}, {"outChannels", 1}, {"kernel", 7}}}}});
        }) == ErrorKind::Config);
}

TEST_CASE("reports serialize") {
  const auto rep = mapWorkload(Network::builtin("lenet5"), Mode::Integer, 4, DeviceParams::defaults(), sharedUnits());
  const auto j = rep.toJson();
  CHECK(j["layers"].size() == rep.layers.size());
  CHECK(j["mode"] == "integer");
  const auto csv = rep.layerCsv();
  CHECK(csv.rfind("index,name,kind,outputs,termsPerOutput,rowBatches,split,batchCycles,latencyNs,energyPJ,flops\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(rep.layers.size()) + 1);
}
