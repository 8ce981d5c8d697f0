#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "fpirm/cim.hpp"
#include "fpirm/device.hpp"
#include "fpirm/ledger.hpp"

namespace fpirm {

enum class Signal { And, Or, Xor, Carry, SuperCarry };
enum class LogicOp { And, Or, Xor };

/// Execution context for microprograms: one subarray of DBCs, the first of
/// which carries the second access port and the CIM unit. Rows are
/// addressed globally; row g lives in DBC g / D at local row g % D.
///
/// Rows [0, TRD) of the CIM DBC form the scratch TR window. Microcode that
/// needs a multi-operand step on rows elsewhere copies them into it.
///
/// Single-threaded: a Machine and its DBCs must be driven from one thread.
/// Independent Machines share nothing.
class Machine {
 public:
  explicit Machine(const DeviceConfig& cfg = {}, bool traceEnabled = false);

  const DeviceConfig& config() const { return cfg_; }
  int domains() const { return cfg_.domains; }
  int trd() const { return cfg_.trd; }
  int totalRows() const { return static_cast<int>(dbcs_.size()) * cfg_.domains; }
  int scratchBase() const { return 0; }

  Dbc& dbc(int i) { return dbcs_.at(i); }
  Dbc& cimDbc() { return dbcs_.front(); }

  // Host access without cost, for staging test data and inspecting results.
  void poke(int row, const RowValue& value);
  RowValue peek(int row) const;

  // Charged host transfers (write driver / read-out through an AP).
  void hostWrite(int row, const RowValue& value);
  RowValue hostRead(int row);

  // Row buffer traffic.
  void load(int row);
  void store(int row);
  void writeImmediate(int row, const RowValue& value);
  /// Lane-masked write of the row buffer into `row` where the predicate is
  /// set. Consumes its cycles whether or not any lane is taken.
  void storePredicated(int row);

  const RowValue& rb() const { return rb_; }
  void rbImmediate(const RowValue& value);
  void rbLogic(LogicOp op, const RowValue& operand);
  void rbInvert() { rbLogic(LogicOp::Xor, RowValue::ones()); }
  /// Per-lane logical shift composed from 8- and 1-position CIM shifts.
  void rbShift(int amount, ShiftSide side, int laneWidth);

  void loadPredicate(int sourcePosition, int laneWidth);
  /// Predicate = (latched OR) AND NOT (row buffer), sampled at `sourcePosition`.
  void loadPredicateOrAndNotRb(int sourcePosition, int laneWidth);
  const LanePredicate& predicate() const { return pred_; }
  void predicatedResetRb();

  /// TR over the window starting at CIM row `base`; latches the signals.
  const SignalRows& transverseRead(int base, int operandCount);
  const SignalRows& latched() const { return latch_; }
  void rbFromLatch(Signal s);

  /// Multi-operand bulk-bitwise operation over up to TRD rows. Operands are
  /// staged into the scratch window unless already forming a full window.
  /// The result is left in the row buffer.
  void bulk(LogicOp op, std::span<const int> rows);

  /// Places `rows` into consecutive slots of the scratch window starting at
  /// `firstSlot`, filling every other slot with zeros (or ones). Returns the
  /// window base. Rows already forming a full window are used in place.
  int stage(std::span<const int> rows, bool padWithOnes, int firstSlot = 0);
  /// Writes zeros (or ones) into scratch slot `slot` unless already known to hold them.
  void padScratch(int slot, bool ones);

  /// One carry-chain step of the 5-operand adder on the window at `base`:
  /// bit `bit` of every lane receives S, bit+1 of window row TRD-1
  /// receives C and bit+2 of window row 0 receives C'. Writes above
  /// `upper` are suppressed.
  void addBitStep(int base, int bit, int upper, int laneWidth);

  /// Writes latched C (placed one bit up) or C' (two bits up) into `row`,
  /// masked at lane walls.
  void storePlacedCarry(int row, Signal s, int laneWidth);

  /// True if rows [first, first+TRD) are all in the CIM DBC at a position
  /// the TR window can cover.
  bool isWindow(std::span<const int> rows) const;

  // Scratch allocation.
  int allocate(int count);
  int allocationMark() const { return next_; }
  void release(int mark) { next_ = mark; }
  class Frame {
   public:
    explicit Frame(Machine& m) : m_(m), mark_(m.allocationMark()) {}
    ~Frame() { m_.release(mark_); }
    Frame(const Frame&) = delete;
    Frame& operator=(const Frame&) = delete;

   private:
    Machine& m_;
    int mark_;
  };

  CostLedger ledger() const;
  std::vector<CostLedger> perDbcLedgers() const;
  void resetLedger();
  Trace& trace() { return *trace_; }

 private:
  struct Loc {
    int dbc;
    int row;
  };
  Loc locate(int row) const;
  Port alignFor(int row);
  void rawWrite(int row, const RowValue& value);
  void noteWindowWrite(int row, std::int8_t constant);
  void charge(EventKind k, int amount = 1, int row = -1) { dbcs_.front().charge(k, amount, row); }

  DeviceConfig cfg_;
  std::unique_ptr<Trace> trace_;
  std::vector<Dbc> dbcs_;
  RowValue rb_;
  LanePredicate pred_;
  SignalRows latch_;
  int next_;
  // Known constant content of scratch window rows: 0 unknown, 1 zeros, 2 ones.
  std::array<std::int8_t, 16> windowConst_{};
};

}  // namespace fpirm
