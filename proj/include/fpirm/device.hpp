#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpirm/ledger.hpp"
#include "fpirm/row.hpp"

namespace fpirm {

/// Geometry of the racetrack device.
///
/// JSON schema (all keys optional):
///   { "domains": 16|32|64, "trd": 2..15, "overheadDomains": int (>= trd-1),
///     "dbcsPerSubarray": int >= 1, "tileRows": 512, "tileCols": 512 }
/// When "overheadDomains" is absent the smallest count that lets every data
/// row reach both access ports is used.
struct DeviceConfig {
  int domains = 32;
  int trd = 7;
  int overheadDomains = -1;
  int dbcsPerSubarray = 16;
  int tileRows = 512;
  int tileCols = 512;

  void validate() const;
  /// Data row aligned with AP0 when the head offset is zero.
  int ap0Home() const { return (domains - trd) / 2; }
  int requiredOverhead() const;
  int resolvedOverhead() const { return overheadDomains < 0 ? requiredOverhead() : overheadDomains; }

  static DeviceConfig fromJson(const nlohmann::json& j);
  static DeviceConfig load(const std::string& path);
  nlohmann::json toJson() const;
};

enum class Port : int { AP0 = 0, AP1 = 1 };
enum class ShiftDir { Up, Down };

/// Per-nanowire transverse-read result, each entry in 0..TRD.
using OnesCounts = std::array<std::uint8_t, kRowBits>;

/// Bit-sliced transverse-read result: count bit k of nanowire i is
/// planes[k].bit(i).
struct TrPlanes {
  std::array<RowValue, 4> planes;
  int count(int nanowire) const {
    int c = 0;
    for (int k = 0; k < 4; ++k) c |= planes[k].bit(nanowire) << k;
    return c;
  }
};

/// Population count of `rows`, bit-sliced across all 512 nanowires.
TrPlanes popcountPlanes(const RowValue* rows, int count);

/// A domain-block cluster: 512 nanowires that shift together, with two
/// access ports TRD-1 domains apart.
///
/// Not thread-safe. Operations on one DBC must not be interleaved; distinct
/// DBCs share no state and may be driven from different threads.
class Dbc {
 public:
  explicit Dbc(const DeviceConfig& cfg, int id = 0, Trace* trace = nullptr);

  int id() const { return id_; }
  int domains() const { return domains_; }
  int trd() const { return trd_; }
  int overhead() const { return overhead_; }
  int headOffset() const { return offset_; }

  /// Data row under `ap`, or nullopt when an overhead domain is there.
  std::optional<int> rowAt(Port ap) const;
  /// Signed shift (positive = up) that puts `row` under `ap`.
  int shiftToAlign(int row, Port ap) const;
  bool canAlign(int row, Port ap) const;

  void shift(ShiftDir dir, int count);
  void align(int row, Port ap);

  RowValue readRow(Port ap);
  void writeRow(Port ap, const RowValue& value);
  OnesCounts transverseRead();
  TrPlanes transverseReadPlanes();
  /// First data row of the TR window, throwing Misaligned if the window
  /// touches overhead domains.
  int windowBase() const;

  /// Host-side inspection and initialisation; not charged.
  const RowValue& peek(int row) const;
  void poke(int row, const RowValue& value);
  void clear();

  const CostLedger& ledger() const { return ledger_; }
  void resetLedger() { ledger_ = {}; }
  void charge(EventKind kind, int amount = 1, int row = -1) {
    ledger_.record(kind, amount);
    if (trace_) trace_->push({kind, id_, amount, row});
  }

 private:
  int checkedRowAt(Port ap) const;

  int id_;
  int domains_;
  int trd_;
  int overhead_;
  int home_;
  int offset_ = 0;
  std::vector<RowValue> rows_;
  CostLedger ledger_;
  Trace* trace_;
};

}  // namespace fpirm
