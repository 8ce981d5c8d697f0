#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fpirm {

/// Primitive categories charged by the device and the CIM unit.
enum class EventKind : std::uint8_t {
  Shift,         // nanowire shift, `amount` domains
  Read,          // access-port read into the row buffer
  Write,         // access-port write from the row buffer or write driver
  TransverseRead,
  LogicalShift,  // CIM-unit shift by 1 or 8
  Logic,         // row-buffer logic (mask, invert, combine)
  Predicated,    // predicated action; consumed whether or not taken
};

const char* toString(EventKind kind);
EventKind eventKindFromString(const std::string& name);

struct TraceEvent {
  EventKind kind;
  int dbc = 0;
  int amount = 1;  // shift distance for Shift, 1 otherwise
  int row = -1;    // data row touched, when meaningful

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// Operation counts. Additive under program concatenation.
struct CostLedger {
  std::uint64_t shifts = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t transverseReads = 0;
  std::uint64_t logicalShifts = 0;
  std::uint64_t logicOps = 0;
  std::uint64_t predicatedOps = 0;
  std::uint64_t cycles = 0;

  void record(const TraceEvent& e) { record(e.kind, e.amount); }
  void record(EventKind kind, int amount = 1) {
    switch (kind) {
      case EventKind::Shift: shifts += amount; cycles += amount; return;
      case EventKind::Read: ++reads; break;
      case EventKind::Write: ++writes; break;
      case EventKind::TransverseRead: ++transverseReads; break;
      case EventKind::LogicalShift: ++logicalShifts; break;
      case EventKind::Logic: ++logicOps; break;
      case EventKind::Predicated: ++predicatedOps; break;
    }
    ++cycles;
  }

  CostLedger& operator+=(const CostLedger& o);
  friend CostLedger operator+(CostLedger a, const CostLedger& b) { return a += b; }
  CostLedger operator-(const CostLedger& o) const;
  CostLedger scaled(std::uint64_t factor) const;
  friend bool operator==(const CostLedger&, const CostLedger&) = default;

  static CostLedger fold(const std::vector<TraceEvent>& events);
};

void to_json(nlohmann::json& j, const CostLedger& l);
void from_json(const nlohmann::json& j, CostLedger& l);
void to_json(nlohmann::json& j, const TraceEvent& e);
void from_json(const nlohmann::json& j, TraceEvent& e);

/// Optional event recorder. Disabled traces cost one branch per primitive.
class Trace {
 public:
  bool enabled() const { return enabled_; }
  void enable(bool on = true) { enabled_ = on; }
  void push(const TraceEvent& e) {
    if (enabled_) events_.push_back(e);
  }
  const std::vector<TraceEvent>& events() const { return events_; }
  void clear() { events_.clear(); }

 private:
  bool enabled_ = false;
  std::vector<TraceEvent> events_;
};

}  // namespace fpirm
