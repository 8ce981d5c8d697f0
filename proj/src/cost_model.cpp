#include "fpirm/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "fpirm/errors.hpp"
#include "fpirm/fp_unit.hpp"
#include "fpirm/int_alu.hpp"
#include "fpirm/kernels.hpp"

namespace fpirm::cost {

// ---- parameters -----------------------------------------------------------

std::vector<std::pair<std::string, Param*>> DeviceParams::fields() {
  return {{"energyPerShift", &energyPerShift}, {"energyPerRead", &energyPerRead},
          {"energyPerWrite", &energyPerWrite}, {"energyPerTR", &energyPerTR},
          {"cimUnitOpEnergy", &cimUnitOpEnergy}, {"tShift", &tShift},
          {"tAccess", &tAccess},               {"tTR", &tTR},
          {"tCim", &tCim},                     {"cimUnitStaticPower", &cimUnitStaticPower}};
}

std::vector<std::pair<std::string, const Param*>> DeviceParams::fields() const {
  std::vector<std::pair<std::string, const Param*>> out;
  for (auto& [k, v] : const_cast<DeviceParams*>(this)->fields()) out.emplace_back(k, v);
  return out;
}

DeviceParams DeviceParams::defaults() {
  DeviceParams p;
  p.energyPerShift = {0.1, "assumed equal to a write; shift current drives every wire of the DBC"};
  p.energyPerRead = {0.1, "assumed equal to a write"};
  p.energyPerWrite = {0.1, "racetrack write energy of circa 0.1 pJ"};
  p.energyPerTR = {0.2, "assumed: one read current across TRD domains, twice a single read"};
  p.cimUnitOpEnergy = {0.05, "placeholder for synthesized 45nm CIM-unit energy"};
  p.tShift = {1.0, "one domain per cycle at the access latency"};
  p.tAccess = {1.0, "racetrack access latency of circa 1 ns"};
  p.tTR = {1.0, "assumed equal to an access"};
  p.tCim = {1.0, "assumed: CIM-unit step fits one access cycle"};
  p.cimUnitStaticPower = {1.0e-6, "placeholder static power per CIM unit"};
  return p;
}

void DeviceParams::validate() const {
  for (const auto& [name, p] : fields()) {
    if (!std::isfinite(p->value) || p->value < 0)
      throw Error(ErrorKind::Config, "parameter " + name + " must be finite and non-negative");
    if (p->provenance.empty()) throw Error(ErrorKind::Config, "parameter " + name + " has no provenance");
  }
}

DeviceParams DeviceParams::fromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "device parameters must be a JSON object");
  DeviceParams p = defaults();
  auto f = p.fields();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "comment") continue;
    auto hit = std::find_if(f.begin(), f.end(), [&](const auto& e) { return e.first == it.key(); });
    if (hit == f.end()) throw Error(ErrorKind::Config, "unknown device parameter '" + it.key() + "'");
    const auto& v = it.value();
    if (!v.is_object() || !v.contains("value") || !v.contains("provenance") ||
        !v.at("value").is_number() || !v.at("provenance").is_string())
      throw Error(ErrorKind::Config, "parameter " + it.key() + " needs {\"value\", \"provenance\"}");
    hit->second->value = v.at("value").get<double>();
    hit->second->provenance = v.at("provenance").get<std::string>();
  }
  p.validate();
  return p;
}

DeviceParams DeviceParams::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open parameter file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, path + ": " + e.what());
  }
  if (j.contains("params")) return fromJson(j.at("params"));
  return fromJson(j);
}

nlohmann::json DeviceParams::toJson() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, p] : fields()) j[name] = {{"value", p->value}, {"provenance", p->provenance}};
  return j;
}

Cost foldCosts(const CostLedger& l, const DeviceParams& p) {
  const double cim = static_cast<double>(l.logicalShifts + l.logicOps + l.predicatedOps);
  Cost c;
  c.latencyNs = l.shifts * p.tShift.value + (l.reads + l.writes) * p.tAccess.value +
                l.transverseReads * p.tTR.value + cim * p.tCim.value;
  c.energyPJ = l.shifts * p.energyPerShift.value + l.reads * p.energyPerRead.value +
               l.writes * p.energyPerWrite.value + l.transverseReads * p.energyPerTR.value +
               cim * p.cimUnitOpEnergy.value;
  return c;
}

Cost foldCosts(const std::vector<CostLedger>& perDbc, const DeviceParams& p) {
  Cost total;
  for (const auto& l : perDbc) {
    const Cost c = foldCosts(l, p);
    total.energyPJ += c.energyPJ;
    total.latencyNs = std::max(total.latencyNs, c.latencyNs);
  }
  return total;
}

const char* toString(Mode m) {
  switch (m) {
    case Mode::Ternary: return "ternary";
    case Mode::Integer: return "integer";
    case Mode::Fp32: return "fp32";
  }
  return "?";
}

Mode modeFromString(const std::string& s) {
  if (s == "ternary") return Mode::Ternary;
  if (s == "integer" || s == "int") return Mode::Integer;
  if (s == "fp32" || s == "fp") return Mode::Fp32;
  throw Error(ErrorKind::Config, "mode must be ternary, integer or fp32 (got '" + s + "')");
}

// ---- networks ---------------------------------------------------------------

int Layer::outRows() const {
  switch (kind) {
    case LayerKind::Conv:
    case LayerKind::MaxPool: return (rows + 2 * pad - kernel) / stride + 1;
    case LayerKind::FullyConnected: return 1;
    case LayerKind::Relu: return rows;
  }
  return rows;
}

int Layer::outCols() const {
  switch (kind) {
    case LayerKind::Conv:
    case LayerKind::MaxPool: return (cols + 2 * pad - kernel) / stride + 1;
    case LayerKind::FullyConnected: return 1;
    case LayerKind::Relu: return cols;
  }
  return cols;
}

long Layer::outputs() const {
  switch (kind) {
    case LayerKind::Conv: return static_cast<long>(outChannels) * outRows() * outCols();
    case LayerKind::FullyConnected: return outChannels;
    case LayerKind::MaxPool: return static_cast<long>(inChannels) * outRows() * outCols();
    case LayerKind::Relu: return static_cast<long>(inChannels) * rows * cols;
  }
  return 0;
}

long Layer::termsPerOutput() const {
  switch (kind) {
    case LayerKind::Conv: return static_cast<long>(kernel) * kernel * inChannels;
    case LayerKind::FullyConnected: return static_cast<long>(inChannels) * rows * cols;
    case LayerKind::MaxPool: return static_cast<long>(kernel) * kernel;
    case LayerKind::Relu: return 1;
  }
  return 0;
}

double Layer::flops() const {
  if (kind == LayerKind::Conv || kind == LayerKind::FullyConnected)
    return 2.0 * static_cast<double>(termsPerOutput()) * static_cast<double>(outputs());
  return 0;
}

namespace {

const char* kindName(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::FullyConnected: return "fc";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Relu: return "relu";
  }
  return "?";
}

int intField(const nlohmann::json& j, const char* key, int fallback, int index) {
  if (!j.contains(key)) {
    if (fallback < 0)
      throw Error(ErrorKind::Config, "layer " + std::to_string(index) + " needs '" + key + "'");
    return fallback;
  }
  if (!j.at(key).is_number_integer())
    throw Error(ErrorKind::Config, "layer " + std::to_string(index) + ": '" + key + "' must be an integer");
  return j.at(key).get<int>();
}

}  // namespace

Network Network::fromJson(const nlohmann::json& j) {
  Network net;
  net.name = j.value("name", std::string("custom"));
  if (!j.contains("input") || !j.contains("layers"))
    throw Error(ErrorKind::Config, "network spec needs 'input' and 'layers'");
  const auto& in = j.at("input");
  int c = in.at("channels").get<int>(), r = in.at("rows").get<int>(), w = in.at("cols").get<int>();
  if (c < 1 || r < 1 || w < 1) throw Error(ErrorKind::Config, "input shape must be positive");
  int index = 0;
  for (const auto& lj : j.at("layers")) {
    Layer l;
    const std::string type = lj.value("type", std::string());
    l.name = lj.value("name", type + std::to_string(index));
    l.inChannels = c;
    l.rows = r;
    l.cols = w;
    if (type == "conv") {
      l.kind = LayerKind::Conv;
      l.outChannels = intField(lj, "outChannels", -1, index);
      l.kernel = intField(lj, "kernel", -1, index);
      l.stride = intField(lj, "stride", 1, index);
      l.pad = intField(lj, "pad", 0, index);
    } else if (type == "fc") {
      l.kind = LayerKind::FullyConnected;
      l.outChannels = intField(lj, "outFeatures", -1, index);
    } else if (type == "maxpool") {
      l.kind = LayerKind::MaxPool;
      l.kernel = intField(lj, "size", -1, index);
      l.stride = intField(lj, "stride", l.kernel, index);
    } else if (type == "relu") {
      l.kind = LayerKind::Relu;
    } else {
      throw Error(ErrorKind::UnsupportedLayer,
                  "layer " + std::to_string(index) + " has unsupported type '" + type + "'");
    }
    if (l.kernel < 1 || l.stride < 1 || l.pad < 0 || l.outRows() < 1 || l.outCols() < 1 ||
        (l.kind != LayerKind::Relu && l.kind != LayerKind::MaxPool && l.outChannels < 1))
      throw Error(ErrorKind::Config, "layer " + std::to_string(index) + " (" + type + ") has an invalid shape");
    switch (l.kind) {
      case LayerKind::Conv: c = l.outChannels; r = l.outRows(); w = l.outCols(); break;
      case LayerKind::FullyConnected: c = l.outChannels; r = w = 1; break;
      case LayerKind::MaxPool: r = l.outRows(); w = l.outCols(); break;
      case LayerKind::Relu: break;
    }
    net.layers.push_back(l);
    ++index;
  }
  return net;
}

Network Network::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open network spec " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, path + ": " + e.what());
  }
  return fromJson(j);
}

namespace {

nlohmann::json conv(int m, int k, int stride = 1, int pad = 0) {
  return {{"type", "conv"}, {"outChannels", m}, {"kernel", k}, {"stride", stride}, {"pad", pad}};
}
nlohmann::json pool(int size, int stride) { return {{"type", "maxpool"}, {"size", size}, {"stride", stride}}; }
nlohmann::json fc(int out) { return {{"type", "fc"}, {"outFeatures", out}}; }
nlohmann::json relu() { return {{"type", "relu"}}; }

}  // namespace

std::vector<std::string> Network::builtinNames() { return {"lenet5", "alexnet", "vgg16"}; }

Network Network::builtin(const std::string& name) {
  nlohmann::json j;
  j["name"] = name;
  auto& L = j["layers"] = nlohmann::json::array();
  if (name == "lenet5") {
    j["input"] = {{"channels", 1}, {"rows", 32}, {"cols", 32}};
    for (auto l : {conv(6, 5), relu(), pool(2, 2), conv(16, 5), relu(), pool(2, 2), fc(120), relu(),
                   fc(84), relu(), fc(10)})
      L.push_back(l);
  } else if (name == "alexnet") {
    j["input"] = {{"channels", 3}, {"rows", 227}, {"cols", 227}};
    for (auto l : {conv(96, 11, 4), relu(), pool(3, 2), conv(256, 5, 1, 2), relu(), pool(3, 2),
                   conv(384, 3, 1, 1), relu(), conv(384, 3, 1, 1), relu(), conv(256, 3, 1, 1), relu(),
                   pool(3, 2), fc(4096), relu(), fc(4096), relu(), fc(1000)})
      L.push_back(l);
  } else if (name == "vgg16") {
    j["input"] = {{"channels", 3}, {"rows", 224}, {"cols", 224}};
    const int blocks[5][2] = {{64, 2}, {128, 2}, {256, 3}, {512, 3}, {512, 3}};
    for (const auto& b : blocks) {
      for (int i = 0; i < b[1]; ++i) {
        L.push_back(conv(b[0], 3, 1, 1));
        L.push_back(relu());
      }
      L.push_back(pool(2, 2));
    }
    for (auto l : {fc(4096), relu(), fc(4096), relu(), fc(1000)}) L.push_back(l);
  } else {
    throw Error(ErrorKind::Config, "unknown built-in network '" + name + "'");
  }
  return fromJson(j);
}

// ---- unit costs -------------------------------------------------------------

namespace {

constexpr int kIntLane = 32;      // 8-bit operands, 32-bit accumulation
constexpr int kTernaryLane = 16;  // 8-bit activations, 16-bit accumulation

RowValue randomRow(std::mt19937_64& g, std::uint64_t mask, int laneWidth) {
  std::vector<std::uint64_t> v(kRowBits / laneWidth);
  for (auto& x : v) x = g() & mask;
  return RowValue::fromLanes(v, laneWidth);
}

RowValue randomNormals(std::mt19937_64& g) {
  std::vector<std::uint64_t> v(fp::kLanesPerRow);
  for (auto& x : v) x = (g() & 0x807FFFFFULL) | ((100 + g() % 50) << 23);
  return RowValue::fromLanes(v, fp::kLane);
}

/// Rows placed outside the CIM DBC, as the bulk of layer data would be.
int farRows(Machine& m, int count) {
  const int first = m.allocate(count + m.domains());
  return std::max(first, m.domains());
}

}  // namespace

UnitCosts::UnitCosts(const DeviceConfig& cfg) : cfg_(cfg) {
  std::mt19937_64 g(12345);
  {
    Machine m(cfg_);
    const int r = farRows(m, 6);
    m.poke(r, randomNormals(g));
    m.poke(r + 1, randomNormals(g));
    const fp::TripleRows t{r + 2, r + 3, r + 4, r + 5};
    m.resetLedger();
    fp::fpMultiply(m, r, r + 1, t);
    fpMultiply_ = m.ledger();
    m.resetLedger();
    fp::decompose(m, r, t);
    m.load(r + 1);
    m.store(t.flag);
    decomposeFlag_ = m.ledger();
    m.resetLedger();
    kernels::relu(m, r, r + 1, fp::kLane);
    reluFp_ = m.ledger();
    m.resetLedger();
    kernels::relu(m, r, r + 1, kIntLane);
    reluInt_ = m.ledger();
  }
  {
    Machine m(cfg_);
    const int r = farRows(m, 3);
    m.poke(r, randomRow(g, 0xFF, kIntLane));
    m.poke(r + 1, randomRow(g, 0xFF, kIntLane));
    m.resetLedger();
    alu::multiply(m, r, r + 1, r + 2, 8, kIntLane);
    intMultiply_ = m.ledger();
  }
  {
    // Ternary product: (x XOR negate) AND nonzero, with the +1 of a negation
    // carried in a companion row, summed later with the other terms.
    Machine m(cfg_);
    const int r = farRows(m, 8);
    const int x = r, neg = r + 1, nz = r + 2, one = r + 3, t = r + 4, term = r + 5, comp = r + 6;
    m.poke(x, randomRow(g, 0xFF, kTernaryLane));
    m.poke(neg, randomRow(g, 0xFFFF, kTernaryLane));
    m.poke(nz, randomRow(g, 0xFFFF, kTernaryLane));
    m.poke(one, RowValue::broadcast(1, kTernaryLane));
    m.resetLedger();
    const int a[] = {x, neg};
    m.bulk(LogicOp::Xor, a);
    m.store(t);
    const int b[] = {t, nz};
    m.bulk(LogicOp::And, b);
    m.store(term);
    const int c[] = {neg, nz, one};
    m.bulk(LogicOp::And, c);
    m.store(comp);
    ternaryTerm_ = m.ledger();
  }
  {
    Machine m(cfg_);
    const int r = farRows(m, 10);
    std::vector<int> ops;
    for (int i = 0; i < 7; ++i) {
      m.poke(r + i, randomRow(g, ~0ULL, 64));
      ops.push_back(r + i);
    }
    m.resetLedger();
    alu::csaReduce(m, ops, 64, {r + 7, r + 8, r + 9});
    csaStaged_ = m.ledger();
    m.resetLedger();
    m.load(r);
    m.store(r + 7);
    copyRow_ = m.ledger();
  }
}

const CostLedger& UnitCosts::add5(int operands, int width, int laneWidth) {
  const auto key = std::make_tuple(operands, width, laneWidth);
  auto it = add5_.find(key);
  if (it != add5_.end()) return it->second;
  Machine m(cfg_);
  std::mt19937_64 g(operands * 131 + width);
  const int r = farRows(m, operands + 1);
  std::vector<int> ops;
  for (int i = 0; i < operands; ++i) {
    m.poke(r + i, randomRow(g, ~0ULL, 64));
    ops.push_back(r + i);
  }
  m.resetLedger();
  alu::add5(m, ops, r + operands, width, 0, laneWidth);
  return add5_[key] = m.ledger();
}

CostLedger UnitCosts::sumRows(long rows, int width, int laneWidth) {
  CostLedger total;
  long n = rows;
  while (n > alu::kAddOperands) {
    const long groups = n / alu::kCsaInputs, rem = n % alu::kCsaInputs;
    total += csaStaged_.scaled(static_cast<std::uint64_t>(groups));
    if (rem > 3) total += csaStaged_;
    else if (groups > 0) total += copyRow_.scaled(static_cast<std::uint64_t>(rem));
    n = 3 * groups + (rem > 3 ? 3 : rem);
  }
  total += add5(static_cast<int>(std::max(1L, n)), width, laneWidth);
  return total;
}

const CostLedger& UnitCosts::fpAdd(int n) {
  auto it = fpAdd_.find(n);
  if (it != fpAdd_.end()) return it->second;
  if (n < 1 || n > kernels::kMaxTermsPerAdd) throw Error(ErrorKind::TooManyOperands, "fpAdd size");
  Machine m(cfg_);
  std::mt19937_64 g(n);
  std::vector<fp::TripleRows> terms;
  const int ab = m.allocate(2);
  for (int i = 0; i < n; ++i) {
    m.poke(ab, randomNormals(g));
    m.poke(ab + 1, randomNormals(g));
    terms.push_back(fp::allocateTriple(m));
    fp::fpMultiply(m, ab, ab + 1, terms.back());
  }
  const int out = m.allocate(2);
  m.resetLedger();
  fp::fpAdd(m, terms, out, out + 1);
  return fpAdd_[n] = m.ledger();
}

CostLedger UnitCosts::fpSum(long terms) {
  const long k = kernels::kMaxTermsPerAdd;
  CostLedger total;
  long count = (terms + k - 1) / k;
  for (long c = 0; c < count; ++c) total += fpAdd(static_cast<int>(std::min(k, terms - c * k)));
  while (count > 1) {
    const long groups = (count + k - 1) / k;
    for (long gi = 0; gi < groups; ++gi) {
      const long len = std::min(k, count - gi * k);
      total += decomposeFlag_.scaled(static_cast<std::uint64_t>(len));
      total += fpAdd(static_cast<int>(len));
    }
    count = groups;
  }
  return total;
}

const CostLedger& UnitCosts::findMax(int rows, int width) {
  const auto key = std::make_pair(rows, width);
  auto it = findMax_.find(key);
  if (it != findMax_.end()) return it->second;
  Machine m(cfg_);
  std::mt19937_64 g(rows * 7 + width);
  const int r = farRows(m, rows + 1);
  std::vector<int> ops;
  const std::uint64_t mask = (1ULL << width) - 1;
  for (int i = 0; i < rows; ++i) {
    m.poke(r + i, randomRow(g, mask, fp::kLane));
    ops.push_back(r + i);
  }
  m.resetLedger();
  fp::findMax(m, ops, r + rows, width, 0, fp::kLane);
  return findMax_[key] = m.ledger();
}

RowCost UnitCosts::dotRow(Mode mode, long terms) {
  if (terms < 1) throw Error(ErrorKind::Config, "a dot product needs at least one term");
  const auto n = static_cast<std::uint64_t>(terms);
  switch (mode) {
    case Mode::Fp32: return {fpMultiply_.scaled(n) + fpSum(terms), fp::kLanesPerRow};
    case Mode::Integer: return {intMultiply_.scaled(n) + sumRows(terms, kIntLane, kIntLane), kRowBits / kIntLane};
    case Mode::Ternary:
      return {ternaryTerm_.scaled(n) + sumRows(2 * terms, kTernaryLane, kTernaryLane), kRowBits / kTernaryLane};
  }
  return {};
}

RowCost UnitCosts::maxRow(Mode mode, long group) {
  // Singles compare on 31 bits; integer activations on 8.
  const int width = mode == Mode::Fp32 ? 31 : 8;
  CostLedger total;
  long n = group;
  while (true) {
    const long groups = (n + 6) / 7;
    for (long gi = 0; gi < groups; ++gi) total += findMax(static_cast<int>(std::min(7L, n - gi * 7)), width);
    if (groups == 1) break;
    n = groups;
  }
  return {total, fp::kLanesPerRow};
}

RowCost UnitCosts::reluRow(Mode mode) {
  if (mode == Mode::Fp32) return {reluFp_, fp::kLanesPerRow};
  return {reluInt_, kRowBits / kIntLane};
}

CostLedger UnitCosts::mergeRow(Mode mode, long parts) {
  if (parts <= 1) return {};
  const auto n = static_cast<std::uint64_t>(parts);
  // Partials arrive by row copy into the merging unit.
  CostLedger total = copyRow_.scaled(n);
  switch (mode) {
    case Mode::Fp32: {
      const long k = kernels::kMaxTermsPerAdd;
      long count = parts;
      while (count > 1) {
        const long groups = (count + k - 1) / k;
        for (long gi = 0; gi < groups; ++gi) {
          const long len = std::min(k, count - gi * k);
          total += decomposeFlag_.scaled(static_cast<std::uint64_t>(len));
          total += fpAdd(static_cast<int>(len));
        }
        count = groups;
      }
      break;
    }
    case Mode::Integer: total += sumRows(parts, kIntLane, kIntLane); break;
    case Mode::Ternary: total += sumRows(parts, kTernaryLane, kTernaryLane); break;
  }
  return total;
}

// ---- workload mapping -------------------------------------------------------

WorkloadReport mapWorkload(const Network& net, Mode mode, int parallelDBCs, const DeviceParams& params,
                           UnitCosts& units, bool splitTerms) {
  if (parallelDBCs < 1) throw Error(ErrorKind::Config, "parallelDBCs must be >= 1");
  params.validate();
  WorkloadReport rep;
  rep.network = net.name;
  rep.mode = mode;
  rep.parallelDBCs = parallelDBCs;
  rep.splitTerms = splitTerms;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    LayerReport lr;
    lr.index = static_cast<int>(i);
    lr.name = l.name;
    lr.kind = kindName(l.kind);
    lr.outputs = l.outputs();
    lr.termsPerOutput = l.termsPerOutput();
    const bool dot = l.kind == LayerKind::Conv || l.kind == LayerKind::FullyConnected;
    RowCost rc = dot ? units.dotRow(mode, lr.termsPerOutput)
                     : l.kind == LayerKind::MaxPool ? units.maxRow(mode, lr.termsPerOutput) : units.reluRow(mode);
    lr.rowBatches = (lr.outputs + rc.lanes - 1) / rc.lanes;
    lr.batchLedger = rc.ledger;
    const long waves = (lr.rowBatches + parallelDBCs - 1) / parallelDBCs;
    lr.latencyNs = static_cast<double>(waves) * foldCosts(rc.ledger, params).latencyNs;
    if (dot && splitTerms) {
      // Try splitting the terms of each batch over idle units; keep the
      // fastest, the smaller split on ties.
      const long maxSplit = std::min<long>(parallelDBCs / lr.rowBatches, lr.termsPerOutput);
      for (long s = 2; s <= maxSplit; s *= 2) {
        const long chunk = (lr.termsPerOutput + s - 1) / s;
        const long parts = (lr.termsPerOutput + chunk - 1) / chunk;
        const CostLedger part = units.dotRow(mode, chunk).ledger;
        const CostLedger merge = units.mergeRow(mode, parts);
        const Cost pc = foldCosts(part, params), mc = foldCosts(merge, params);
        const long w = (lr.rowBatches * parts + parallelDBCs - 1) / parallelDBCs;
        const double latency = static_cast<double>(w) * pc.latencyNs + mc.latencyNs;
        if (latency < lr.latencyNs) {
          lr.split = parts;
          lr.batchLedger = part.scaled(static_cast<std::uint64_t>(parts)) + merge;
          lr.latencyNs = latency;
        }
      }
    }
    lr.totalLedger = lr.batchLedger.scaled(static_cast<std::uint64_t>(lr.rowBatches));
    lr.energyPJ = static_cast<double>(lr.rowBatches) * foldCosts(lr.batchLedger, params).energyPJ;
    lr.flops = l.flops();
    rep.latencyNs += lr.latencyNs;
    rep.dynamicEnergyPJ += lr.energyPJ;
    rep.flops += lr.flops;
    rep.ledger += lr.totalLedger;
    rep.layers.push_back(lr);
  }
  // W x ns = 1e3 pJ.
  rep.staticEnergyPJ = parallelDBCs * params.cimUnitStaticPower.value * rep.latencyNs * 1e3;
  if (rep.latencyNs > 0) {
    rep.fps = 1e9 / rep.latencyNs;
    rep.gflops = rep.flops / rep.latencyNs;
    rep.powerW = rep.energyPerInferencePJ() / rep.latencyNs * 1e-3;
  }
  if (rep.powerW > 0) {
    rep.fpsPerW = rep.fps / rep.powerW;
    rep.gflopsPerW = rep.gflops / rep.powerW;
  }
  return rep;
}

nlohmann::json WorkloadReport::toJson() const {
  nlohmann::json j;
  j["network"] = network;
  j["mode"] = toString(mode);
  j["parallelDBCs"] = parallelDBCs;
  j["splitTerms"] = splitTerms;
  j["latencyNs"] = latencyNs;
  j["dynamicEnergyPJ"] = dynamicEnergyPJ;
  j["staticEnergyPJ"] = staticEnergyPJ;
  j["energyPerInferencePJ"] = energyPerInferencePJ();
  j["flops"] = flops;
  j["fps"] = fps;
  j["gflops"] = gflops;
  j["powerW"] = powerW;
  j["fpsPerW"] = fpsPerW;
  j["gflopsPerW"] = gflopsPerW;
  j["ledger"] = ledger;
  auto& arr = j["layers"] = nlohmann::json::array();
  for (const auto& l : layers) {
    arr.push_back({{"index", l.index},
                   {"name", l.name},
                   {"kind", l.kind},
                   {"outputs", l.outputs},
                   {"termsPerOutput", l.termsPerOutput},
                   {"rowBatches", l.rowBatches},
                   {"split", l.split},
                   {"batchLedger", l.batchLedger},
                   {"latencyNs", l.latencyNs},
                   {"energyPJ", l.energyPJ},
                   {"flops", l.flops}});
  }
  return j;
}

std::string WorkloadReport::layerCsv() const {
  std::ostringstream os;
  os.precision(17);
  os << "index,name,kind,outputs,termsPerOutput,rowBatches,split,batchCycles,latencyNs,energyPJ,flops\n";
  for (const auto& l : layers)
    os << l.index << ',' << l.name << ',' << l.kind << ',' << l.outputs << ',' << l.termsPerOutput << ','
       << l.rowBatches << ',' << l.split << ',' << l.batchLedger.cycles << ',' << l.latencyNs << ',' << l.energyPJ << ','
       << l.flops << '\n';
  return os.str();
}

}  // namespace fpirm::cost
