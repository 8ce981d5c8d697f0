#include "fpirm/machine.hpp"

#include <cstdlib>
#include <string>

#include "fpirm/errors.hpp"

namespace fpirm {

namespace {

// Bit `bit` of every lane.
RowValue laneBit(int laneWidth, int bit) {
  std::uint64_t w = 0;
  for (int b = bit; b < 64; b += laneWidth) w |= 1ULL << b;
  RowValue r;
  for (int i = 0; i < kRowWords; ++i) r.word(i) = w;
  return r;
}

}  // namespace

Machine::Machine(const DeviceConfig& cfg, bool traceEnabled)
    : cfg_(cfg), trace_(std::make_unique<Trace>()), next_(cfg.trd) {
  cfg_.validate();
  if (cfg_.trd != 7)
    throw Error(ErrorKind::Config, "the CIM unit carry encoding requires trd = 7");
  trace_->enable(traceEnabled);
  dbcs_.reserve(cfg_.dbcsPerSubarray);
  for (int i = 0; i < cfg_.dbcsPerSubarray; ++i) dbcs_.emplace_back(cfg_, i, trace_.get());
}

Machine::Loc Machine::locate(int row) const {
  if (row < 0 || row >= totalRows())
    throw Error(ErrorKind::CapacityExceeded, "row " + std::to_string(row) + " outside subarray of " +
                                                 std::to_string(totalRows()) + " rows");
  return {row / cfg_.domains, row % cfg_.domains};
}

void Machine::poke(int row, const RowValue& value) {
  const auto l = locate(row);
  dbcs_[l.dbc].poke(l.row, value);
  noteWindowWrite(row, 0);
}

RowValue Machine::peek(int row) const {
  const auto l = locate(row);
  return dbcs_[l.dbc].peek(l.row);
}

Port Machine::alignFor(int row) {
  const auto l = locate(row);
  Dbc& d = dbcs_[l.dbc];
  Port best = Port::AP0;
  if (l.dbc == 0) {
    const bool ok0 = d.canAlign(l.row, Port::AP0);
    const bool ok1 = d.canAlign(l.row, Port::AP1);
    if (ok1 && (!ok0 || std::abs(d.shiftToAlign(l.row, Port::AP1)) <
                            std::abs(d.shiftToAlign(l.row, Port::AP0))))
      best = Port::AP1;
  }
  d.align(l.row, best);
  return best;
}

void Machine::noteWindowWrite(int row, std::int8_t constant) {
  if (row >= 0 && row < cfg_.trd) windowConst_[row] = constant;
}

void Machine::rawWrite(int row, const RowValue& value) {
  const Port ap = alignFor(row);
  dbcs_[locate(row).dbc].writeRow(ap, value);
}

void Machine::hostWrite(int row, const RowValue& value) { writeImmediate(row, value); }

RowValue Machine::hostRead(int row) {
  load(row);
  return rb_;
}

void Machine::load(int row) {
  const Port ap = alignFor(row);
  rb_ = dbcs_[locate(row).dbc].readRow(ap);
}

void Machine::store(int row) {
  rawWrite(row, rb_);
  noteWindowWrite(row, 0);
}

void Machine::writeImmediate(int row, const RowValue& value) {
  rawWrite(row, value);
  std::int8_t c = 0;
  if (value.isZero()) c = 1;
  else if (value == RowValue::ones()) c = 2;
  noteWindowWrite(row, c);
}

void Machine::storePredicated(int row) {
  charge(EventKind::Predicated, 1, row);
  const auto l = locate(row);
  RowValue target = dbcs_[l.dbc].peek(l.row);
  predicatedApply(pred_, PredAction::Write, target, rb_);
  rawWrite(row, target);
  noteWindowWrite(row, 0);
}

void Machine::rbImmediate(const RowValue& value) {
  charge(EventKind::Logic);
  rb_ = value;
}

void Machine::rbLogic(LogicOp op, const RowValue& operand) {
  charge(EventKind::Logic);
  switch (op) {
    case LogicOp::And: rb_ &= operand; break;
    case LogicOp::Or: rb_ |= operand; break;
    case LogicOp::Xor: rb_ ^= operand; break;
  }
}

void Machine::rbShift(int amount, ShiftSide side, int laneWidth) {
  if (amount <= 0) return;
  if (!isLegalLaneWidth(laneWidth) && laneWidth != kRowBits)
    throw Error(ErrorKind::LanePackingError, "lane width " + std::to_string(laneWidth));
  int left = amount;
  while (left >= 8) {
    rb_ = logicalShift(rb_, 8, side);
    charge(EventKind::LogicalShift);
    left -= 8;
  }
  while (left > 0) {
    rb_ = logicalShift(rb_, 1, side);
    charge(EventKind::LogicalShift);
    --left;
  }
  if (laneWidth < kRowBits) {
    rb_ &= cachedLaneWallMask(laneWidth, amount, side);
    charge(EventKind::Logic);
  }
}

void Machine::loadPredicate(int sourcePosition, int laneWidth) {
  pred_ = loadLanePredicates(rb_, laneWidth, sourcePosition);
}

void Machine::loadPredicateOrAndNotRb(int sourcePosition, int laneWidth) {
  charge(EventKind::Logic);  // invert
  charge(EventKind::Logic);  // and
  pred_ = loadLanePredicates(latch_.orBits & ~rb_, laneWidth, sourcePosition);
}

void Machine::predicatedResetRb() {
  charge(EventKind::Predicated);
  predicatedApply(pred_, PredAction::Reset, rb_);
}

const SignalRows& Machine::transverseRead(int base, int operandCount) {
  Dbc& d = cimDbc();
  d.align(base, Port::AP0);
  latch_ = deriveSignalRows(d.transverseReadPlanes(), operandCount);
  return latch_;
}

void Machine::rbFromLatch(Signal s) {
  switch (s) {
    case Signal::And: rb_ = latch_.andBits; break;
    case Signal::Or: rb_ = latch_.orBits; break;
    case Signal::Xor: rb_ = latch_.xorBits; break;
    case Signal::Carry: rb_ = latch_.carry; break;
    case Signal::SuperCarry: rb_ = latch_.superCarry; break;
  }
}

bool Machine::isWindow(std::span<const int> rows) const {
  if (static_cast<int>(rows.size()) != cfg_.trd) return false;
  const int first = rows[0];
  if (first < 0 || first + cfg_.trd > cfg_.domains) return false;
  for (int j = 1; j < cfg_.trd; ++j)
    if (rows[j] != first + j) return false;
  return dbcs_.front().canAlign(first, Port::AP0);
}

int Machine::stage(std::span<const int> rows, bool padWithOnes, int firstSlot) {
  const int k = static_cast<int>(rows.size());
  if (k + firstSlot > cfg_.trd)
    throw Error(ErrorKind::TooManyOperands, std::to_string(k) + " operands for a TR window of " +
                                                std::to_string(cfg_.trd));
  if (firstSlot == 0 && isWindow(rows)) return rows[0];
  const int base = scratchBase();
  for (int j = 0; j < k; ++j) {
    const int slot = base + firstSlot + j;
    if (rows[j] == slot) continue;
    if (rows[j] >= base && rows[j] < base + cfg_.trd)
      throw Error(ErrorKind::Program, "operand row " + std::to_string(rows[j]) +
                                          " lies in the scratch window at the wrong slot");
    load(rows[j]);
    store(slot);
  }
  for (int j = 0; j < cfg_.trd; ++j) {
    if (j >= firstSlot && j < firstSlot + k) continue;
    padScratch(j, padWithOnes);
  }
  return base;
}

void Machine::padScratch(int slot, bool ones) {
  if (slot < 0 || slot >= cfg_.trd) throw Error(ErrorKind::Program, "scratch slot out of range");
  if (windowConst_[slot] != (ones ? 2 : 1))
    writeImmediate(scratchBase() + slot, ones ? RowValue::ones() : RowValue::zeros());
}

void Machine::bulk(LogicOp op, std::span<const int> rows) {
  if (rows.empty()) throw Error(ErrorKind::TooManyOperands, "bulk operation without operands");
  const int base = stage(rows, op == LogicOp::And);
  transverseRead(base, cfg_.trd);
  switch (op) {
    case LogicOp::And: rb_ = latch_.andBits; break;
    case LogicOp::Or: rb_ = latch_.orBits; break;
    case LogicOp::Xor: rb_ = latch_.xorBits; break;
  }
}

void Machine::addBitStep(int base, int bit, int upper, int laneWidth) {
  Dbc& d = cimDbc();
  d.align(base, Port::AP0);
  const auto planes = d.transverseReadPlanes();
  const int top = base + cfg_.trd - 1;
  const RowValue mi = laneBit(laneWidth, bit);
  RowValue o0 = d.peek(base);
  o0 = (o0 & ~mi) | (planes.planes[0] & mi);
  if (bit + 1 < upper) {
    const RowValue mc = laneBit(laneWidth, bit + 1);
    RowValue o6 = d.peek(top);
    o6 = (o6 & ~mc) | ((planes.planes[1] & mi).shiftedLeft(1) & mc);
    d.poke(top, o6);
    noteWindowWrite(top, 0);
  }
  if (bit + 2 < upper) {
    const RowValue mcp = laneBit(laneWidth, bit + 2);
    o0 = (o0 & ~mcp) | (((planes.planes[2] | planes.planes[3]) & mi).shiftedLeft(2) & mcp);
  }
  d.poke(base, o0);
  noteWindowWrite(base, 0);
  // S, C and C' land through both ports in one writeback cycle.
  d.charge(EventKind::Write, 1, base);
}

void Machine::storePlacedCarry(int row, Signal s, int laneWidth) {
  const int amount = s == Signal::Carry ? 1 : 2;
  const RowValue& src = s == Signal::Carry ? latch_.carry : latch_.superCarry;
  RowValue placed = src.shiftedLeft(amount);
  if (laneWidth < kRowBits) {
    placed &= cachedLaneWallMask(laneWidth, amount, ShiftSide::Left);
    charge(EventKind::Logic);
  }
  rawWrite(row, placed);
  noteWindowWrite(row, 0);
}

int Machine::allocate(int count) {
  if (next_ + count > totalRows())
    throw Error(ErrorKind::CapacityExceeded,
                "need " + std::to_string(count) + " rows, " + std::to_string(totalRows() - next_) +
                    " free in a subarray of " + std::to_string(totalRows()));
  const int first = next_;
  next_ += count;
  return first;
}

CostLedger Machine::ledger() const {
  CostLedger total;
  for (const auto& d : dbcs_) total += d.ledger();
  return total;
}

std::vector<CostLedger> Machine::perDbcLedgers() const {
  std::vector<CostLedger> out;
  for (const auto& d : dbcs_) out.push_back(d.ledger());
  return out;
}

void Machine::resetLedger() {
  for (auto& d : dbcs_) d.resetLedger();
  trace_->clear();
}

}  // namespace fpirm
