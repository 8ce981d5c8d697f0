#include "fpirm/cim.hpp"

#include <algorithm>
#include <bit>
#include <vector>
#include <string>

#include "fpirm/errors.hpp"

namespace fpirm {

CimSignals deriveSignals(const OnesCounts& ones, int operandCount) {
  CimSignals s;
  s.ones = ones;
  for (int i = 0; i < kRowBits; ++i) {
    const int n = ones[i];
    s.andBits.setBit(i, n >= operandCount);
    s.orBits.setBit(i, n >= 1);
    s.xorBits.setBit(i, n & 1);
    s.carry.setBit(i, carryOf(n));
    s.superCarry.setBit(i, superCarryOf(n));
  }
  return s;
}

SignalRows deriveSignalRows(const TrPlanes& p, int operandCount) {
  // For counts 0..7 the carry encoding is exactly count bits 1 and 2.
  SignalRows s;
  s.xorBits = p.planes[0];
  s.carry = p.planes[1];
  s.superCarry = p.planes[2] | p.planes[3];
  s.orBits = p.planes[0] | p.planes[1] | p.planes[2] | p.planes[3];
  // count >= operandCount, evaluated bit-sliced.
  RowValue ge;
  RowValue eq = RowValue::ones();
  for (int k = 3; k >= 0; --k) {
    const bool want = (operandCount >> k) & 1;
    if (want) {
      eq &= p.planes[k];
    } else {
      ge |= eq & p.planes[k];
      eq &= ~p.planes[k];
    }
  }
  s.andBits = ge | eq;
  return s;
}

RowValue logicalShift(const RowValue& row, int amount, ShiftSide side) {
  if (amount != 1 && amount != 8)
    throw Error(ErrorKind::Program, "CIM logical shift must be 1 or 8, got " + std::to_string(amount));
  return side == ShiftSide::Left ? row.shiftedLeft(amount) : row.shiftedRight(amount);
}

RowValue laneWallMask(int laneWidth, int amount, ShiftSide side) {
  if (amount >= laneWidth) return RowValue{};
  if (side == ShiftSide::Left) return laneFieldMask(laneWidth, amount, laneWidth);
  return laneFieldMask(laneWidth, 0, laneWidth - amount);
}

const RowValue& cachedLaneWallMask(int laneWidth, int amount, ShiftSide side) {
  // [log2(width) - 3][side][amount], amounts 0..64; wider amounts clear the lane.
  static const auto table = [] {
    std::vector<RowValue> t(4 * 2 * 65);
    for (int wi = 0; wi < 4; ++wi)
      for (int sd = 0; sd < 2; ++sd)
        for (int a = 0; a <= 64; ++a)
          t[(wi * 2 + sd) * 65 + a] = laneWallMask(8 << wi, a, sd ? ShiftSide::Right : ShiftSide::Left);
    return t;
  }();
  static const RowValue empty{};
  if (amount > 64) return empty;
  const int wi = std::countr_zero(static_cast<unsigned>(laneWidth)) - 3;
  return table[(wi * 2 + (side == ShiftSide::Right)) * 65 + amount];
}

RowValue laneShift(const RowValue& row, int amount, ShiftSide side, int laneWidth) {
  if (amount == 0) return row;
  RowValue r = side == ShiftSide::Left ? row.shiftedLeft(amount) : row.shiftedRight(amount);
  if (laneWidth < kRowBits) r &= cachedLaneWallMask(laneWidth, amount, side);
  return r;
}

namespace {

void checkSource(int laneWidth, int sourcePosition) {
  if (std::find(kPredicateSources.begin(), kPredicateSources.end(), sourcePosition) ==
      kPredicateSources.end())
    throw Error(ErrorKind::IllegalPredicateSource,
                "bit " + std::to_string(sourcePosition) + " is not wired to the predication register");
  if (!isLegalLaneWidth(laneWidth) || sourcePosition >= laneWidth)
    throw Error(ErrorKind::IllegalPredicateSource,
                "bit " + std::to_string(sourcePosition) + " outside a " + std::to_string(laneWidth) +
                    "-bit lane");
}

}  // namespace

PredicationRegister loadPredicate(const RowValue& rowBuffer, int lane, int laneWidth,
                                  int sourcePosition) {
  checkSource(laneWidth, sourcePosition);
  if (lane < 0 || lane >= kRowBits / laneWidth)
    throw Error(ErrorKind::LanePackingError, "lane " + std::to_string(lane) + " out of range");
  return {rowBuffer.bit(lane * laneWidth + sourcePosition), sourcePosition};
}

LanePredicate loadLanePredicates(const RowValue& rowBuffer, int laneWidth, int sourcePosition) {
  checkSource(laneWidth, sourcePosition);
  LanePredicate p;
  p.laneWidth = laneWidth;
  p.sourcePosition = sourcePosition;
  const int n = kRowBits / laneWidth;
  const std::uint64_t all = laneWidth == 64 ? ~0ULL : ((1ULL << laneWidth) - 1);
  for (int k = 0; k < n; ++k)
    if (rowBuffer.bit(k * laneWidth + sourcePosition)) {
      p.mask |= 1ULL << k;
      p.select.setLane(k, laneWidth, all);
    }
  return p;
}

void predicatedApply(const LanePredicate& pred, PredAction action, RowValue& target,
                     const RowValue& source, int shiftAmount, ShiftSide side) {
  if (pred.mask == 0) return;
  const RowValue sel = pred.laneSelect();
  RowValue incoming;
  switch (action) {
    case PredAction::Write: incoming = source; break;
    case PredAction::Reset: break;
    case PredAction::ShiftWrite: incoming = laneShift(source, shiftAmount, side, pred.laneWidth); break;
  }
  target = (target & ~sel) | (incoming & sel);
}

}  // namespace fpirm
