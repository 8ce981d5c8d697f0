#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpirm/device.hpp"
#include "fpirm/ledger.hpp"

namespace fpirm::cost {

/// A parameter value with a note on where it comes from.
struct Param {
  double value = 0;
  std::string provenance;
};

/// Energies in pJ per row-wide primitive, times in ns, power in W.
struct DeviceParams {
  Param energyPerShift;
  Param energyPerRead;
  Param energyPerWrite;
  Param energyPerTR;
  Param cimUnitOpEnergy;  // logic, CIM shift and predicated steps
  Param tShift;
  Param tAccess;
  Param tTR;
  Param tCim;
  Param cimUnitStaticPower;  // per active CIM unit

  static DeviceParams defaults();
  static DeviceParams fromJson(const nlohmann::json& j);
  static DeviceParams load(const std::string& path);
  nlohmann::json toJson() const;
  void validate() const;

  /// Name -> parameter, in a fixed order.
  std::vector<std::pair<std::string, Param*>> fields();
  std::vector<std::pair<std::string, const Param*>> fields() const;
};

struct Cost {
  double latencyNs = 0;
  double energyPJ = 0;
};

/// Sequential cost of one ledger.
Cost foldCosts(const CostLedger& ledger, const DeviceParams& p);
/// Ledgers of DBCs running in parallel: energy adds, latency is the longest.
Cost foldCosts(const std::vector<CostLedger>& perDbc, const DeviceParams& p);

enum class Mode { Ternary, Integer, Fp32 };
const char* toString(Mode m);
Mode modeFromString(const std::string& s);

enum class LayerKind { Conv, FullyConnected, MaxPool, Relu };

/// One network layer with its input shape already resolved.
struct Layer {
  LayerKind kind = LayerKind::Conv;
  std::string name;
  int inChannels = 0, rows = 0, cols = 0;  // input shape
  int outChannels = 0;                     // conv filters / fc outputs
  int kernel = 1;                          // conv kernel, or pooling window
  int stride = 1;
  int pad = 0;

  int outRows() const;
  int outCols() const;
  long outputs() const;
  /// Products summed per output (conv, fc), or values compared (maxpool).
  long termsPerOutput() const;
  /// Floating-point operations: 2 * k^2 * N * M * R_out * C_out for conv.
  double flops() const;
};

struct Network {
  std::string name;
  std::vector<Layer> layers;

  /// {"name", "input": {"channels","rows","cols"}, "layers": [{"type", ...}]}
  static Network fromJson(const nlohmann::json& j);
  static Network load(const std::string& path);
  static Network builtin(const std::string& name);  // lenet5, alexnet, vgg16
  static std::vector<std::string> builtinNames();
};

/// Ledger of one row-parallel microprogram and how many outputs it yields.
struct RowCost {
  CostLedger ledger;
  int lanes = 1;
};

/// Ledgers of the row-parallel microprograms used by the workload model,
/// measured once on the simulator and composed for larger sizes.
class UnitCosts {
 public:
  explicit UnitCosts(const DeviceConfig& cfg = {});

  /// One row of outputs, each the sum of `terms` products.
  RowCost dotRow(Mode m, long terms);
  /// One row of outputs, each the maximum of `group` values.
  RowCost maxRow(Mode m, long group);
  RowCost reluRow(Mode m);
  /// Combining `parts` partial-sum rows of one output row into one.
  CostLedger mergeRow(Mode m, long parts);

  // Building blocks, exposed for tests.
  const CostLedger& fpMultiply() const { return fpMultiply_; }
  const CostLedger& fpAdd(int n);
  CostLedger sumRows(long rows, int width, int laneWidth);
  CostLedger fpSum(long terms);

 private:
  const CostLedger& add5(int operands, int width, int laneWidth);
  const CostLedger& findMax(int rows, int width);

  DeviceConfig cfg_;
  CostLedger fpMultiply_, decomposeFlag_, intMultiply_, ternaryTerm_, csaStaged_, copyRow_;
  CostLedger reluFp_, reluInt_;
  std::map<int, CostLedger> fpAdd_;
  std::map<std::tuple<int, int, int>, CostLedger> add5_;  // (operands, width, laneWidth)
  std::map<std::pair<int, int>, CostLedger> findMax_;
};

struct LayerReport {
  int index = 0;
  std::string name;
  std::string kind;
  long outputs = 0;
  long termsPerOutput = 0;
  long rowBatches = 0;
  long split = 1;  // units sharing the terms of one output row
  CostLedger batchLedger;
  CostLedger totalLedger;
  double latencyNs = 0;
  double energyPJ = 0;
  double flops = 0;
};

struct WorkloadReport {
  std::string network;
  Mode mode = Mode::Fp32;
  int parallelDBCs = 1;
  bool splitTerms = false;
  double latencyNs = 0;
  double dynamicEnergyPJ = 0;
  double staticEnergyPJ = 0;
  double flops = 0;
  double fps = 0;
  double gflops = 0;
  double powerW = 0;
  double fpsPerW = 0;
  double gflopsPerW = 0;
  CostLedger ledger;
  std::vector<LayerReport> layers;

  double energyPerInferencePJ() const { return dynamicEnergyPJ + staticEnergyPJ; }
  nlohmann::json toJson() const;
  std::string layerCsv() const;
};

/// Row batches of each layer are spread over `parallelDBCs` CIM units. With
/// `splitTerms`, a dot-product layer with fewer batches than units may also
/// split the terms of each batch across units and merge the partial rows.
WorkloadReport mapWorkload(const Network& net, Mode mode, int parallelDBCs, const DeviceParams& params,
                           UnitCosts& units, bool splitTerms = false);

}  // namespace fpirm::cost
