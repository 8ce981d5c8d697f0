#include "fpirm/int_alu.hpp"

#include <string>

#include "fpirm/errors.hpp"

namespace fpirm::alu {

namespace {

void checkLanes(int laneWidth) {
  if (!isLegalLaneWidth(laneWidth))
    throw Error(ErrorKind::LanePackingError, "lane width " + std::to_string(laneWidth));
}

}  // namespace

std::vector<ReductionRound> reductionSchedule(int operands) {
  std::vector<ReductionRound> rounds;
  int n = operands;
  while (n > kAddOperands) {
    ReductionRound r{n, n / kCsaInputs, n % kCsaInputs, false};
    r.reduceRemainder = r.remainder > 3;
    rounds.push_back(r);
    n = r.result();
  }
  return rounds;
}

void csaReduce(Machine& m, std::span<const int> operands, int laneWidth, CsaRows out) {
  checkLanes(laneWidth);
  if (operands.size() > kCsaInputs)
    throw Error(ErrorKind::TooManyOperands, std::to_string(operands.size()) + " rows for a 7-to-3 reduction");
  const int base = m.stage(operands, false);
  m.transverseRead(base, kCsaInputs);
  m.rbFromLatch(Signal::Xor);
  m.store(out.sum);
  m.storePlacedCarry(out.carry, Signal::Carry, laneWidth);
  m.storePlacedCarry(out.superCarry, Signal::SuperCarry, laneWidth);
}

void add5(Machine& m, std::span<const int> operands, int dst, int width, int offset, int laneWidth) {
  checkLanes(laneWidth);
  if (operands.size() > kAddOperands)
    throw Error(ErrorKind::TooManyOperands,
                std::to_string(operands.size()) + " operands; the adder takes at most 5");
  if (width < 2 || offset < 0 || offset + width > laneWidth)
    throw Error(ErrorKind::LanePackingError, "bit range [" + std::to_string(offset) + ", " +
                                                 std::to_string(offset + width) + ") in a " +
                                                 std::to_string(laneWidth) + "-bit lane");
  // O[0] and O[6] are reserved for C' and C; operands sit in O[1..5].
  const int base = m.stage(operands, false, 1);
  const int upper = offset + width;
  for (int i = offset; i < upper; ++i) m.addBitStep(base, i, upper, laneWidth);
  m.load(base);
  m.store(dst);
}

void sumRows(Machine& m, std::vector<int> rows, int dst, int width, int offset, int laneWidth) {
  for (const auto& round : reductionSchedule(static_cast<int>(rows.size()))) {
    for (int g = 0; g < round.fullGroups; ++g) {
      csaReduce(m, std::span<const int>(rows).subspan(7 * g, 7), laneWidth,
                {rows[3 * g], rows[3 * g + 1], rows[3 * g + 2]});
    }
    const int start = 7 * round.fullGroups;
    const int dest = 3 * round.fullGroups;
    if (round.reduceRemainder) {
      csaReduce(m, std::span<const int>(rows).subspan(start, round.remainder), laneWidth,
                {rows[dest], rows[dest + 1], rows[dest + 2]});
    } else {
      for (int j = 0; j < round.remainder; ++j) {
        if (rows[dest + j] == rows[start + j]) continue;
        m.load(rows[start + j]);
        m.store(rows[dest + j]);
      }
    }
    rows.resize(round.result());
  }
  add5(m, rows, dst, width, offset, laneWidth);
}

void multiply(Machine& m, int a, int b, int dst, int width, int laneWidth) {
  checkLanes(laneWidth);
  if (width < 1 || 2 * width > laneWidth)
    throw Error(ErrorKind::LanePackingError, std::to_string(width) + "-bit operands need a " +
                                                 std::to_string(2 * width) + "-bit product lane, have " +
                                                 std::to_string(laneWidth));
  const RowValue spill = ~laneFieldMask(laneWidth, 0, width);
  if (!(m.peek(a) & spill).isZero() || !(m.peek(b) & spill).isZero())
    throw Error(ErrorKind::LanePackingError, "operand bits above bit " + std::to_string(width - 1));

  Machine::Frame frame(m);
  // Partial products are contiguous so the reduction can read them in
  // place. The shifted operands (A >> i, B << i) form a chain starting at
  // the next DBC boundary; each DBC has its own head, so both walks only
  // move forward a few rows per step.
  const int d = m.domains();
  m.allocate((d - m.allocationMark() % d) % d);
  const int partial = m.allocate(width);
  m.allocate((d - m.allocationMark() % d) % d);
  const int chain = m.allocate(2 * (width - 1));
  std::vector<int> rows(width);
  int curA = a;
  int curB = b;
  for (int i = 0; i < width; ++i) {
    const bool last = i + 1 == width;
    rows[i] = partial + i;
    m.writeImmediate(partial + i, RowValue::zeros());
    // Bit i of A sits at lane bit 0; it predicates the copy of B << i.
    m.load(curA);
    m.loadPredicate(0, laneWidth);
    if (!last) {
      m.rbShift(1, ShiftSide::Right, laneWidth);
      m.store(chain + 2 * i);
    }
    m.load(curB);
    m.storePredicated(partial + i);
    if (!last) {
      m.rbShift(1, ShiftSide::Left, laneWidth);
      m.store(chain + 2 * i + 1);
    }
    curA = chain + 2 * i;
    curB = chain + 2 * i + 1;
  }
  sumRows(m, std::move(rows), dst, 2 * width, 0, laneWidth);
}

CsaResult csaReduce(Machine& m, const std::vector<RowValue>& operands, int laneWidth) {
  if (operands.size() > kCsaInputs)
    throw Error(ErrorKind::TooManyOperands, std::to_string(operands.size()) + " rows for a 7-to-3 reduction");
  Machine::Frame frame(m);
  // Operands occupy a full window in the CIM DBC when room allows.
  const int in = m.allocate(kCsaInputs);
  const int out = m.allocate(3);
  std::vector<int> rows;
  for (int j = 0; j < kCsaInputs; ++j) {
    m.poke(in + j, j < static_cast<int>(operands.size()) ? operands[j] : RowValue{});
    rows.push_back(in + j);
  }
  csaReduce(m, rows, laneWidth, {out, out + 1, out + 2});
  return {m.peek(out), m.peek(out + 1), m.peek(out + 2)};
}

RowValue add5(Machine& m, const std::vector<RowValue>& operands, int width, int offset, int laneWidth) {
  if (operands.size() > kAddOperands)
    throw Error(ErrorKind::TooManyOperands,
                std::to_string(operands.size()) + " operands; the adder takes at most 5");
  Machine::Frame frame(m);
  const int in = m.allocate(static_cast<int>(operands.size()) + 1);
  std::vector<int> rows;
  for (std::size_t j = 0; j < operands.size(); ++j) {
    m.poke(in + static_cast<int>(j), operands[j]);
    rows.push_back(in + static_cast<int>(j));
  }
  const int dst = in + static_cast<int>(operands.size());
  add5(m, rows, dst, width, offset, laneWidth);
  return m.peek(dst);
}

RowValue multiply(Machine& m, const RowValue& a, const RowValue& b, int width, int laneWidth) {
  Machine::Frame frame(m);
  const int ra = m.allocate(3);
  m.poke(ra, a);
  m.poke(ra + 1, b);
  multiply(m, ra, ra + 1, ra + 2, width, laneWidth);
  return m.peek(ra + 2);
}

}  // namespace fpirm::alu
