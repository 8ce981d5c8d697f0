#pragma once

#include <array>
#include <cstdint>

#include "fpirm/device.hpp"
#include "fpirm/row.hpp"

namespace fpirm {

/// Per-bit outputs of the CIM unit for one transverse read.
struct CimSignals {
  std::array<std::uint8_t, kRowBits> ones{};
  RowValue andBits;
  RowValue orBits;
  RowValue xorBits;  // also the sum S
  RowValue carry;    // C, weight 2
  RowValue superCarry;  // C', weight 4
};

/// Row-parallel form of the signals, computed from bit-sliced counts.
struct SignalRows {
  RowValue andBits;
  RowValue orBits;
  RowValue xorBits;
  RowValue carry;
  RowValue superCarry;
};

/// Truth table of the TRD=7 CIM unit applied to every nanowire.
/// `operandCount` is the number of live operands; AND is true when the
/// count reaches it (rows beyond it are padded with ones by convention).
CimSignals deriveSignals(const OnesCounts& ones, int operandCount);
SignalRows deriveSignalRows(const TrPlanes& planes, int operandCount);

/// The carry encoding for one column count.
constexpr bool carryOf(int ones) { return (ones >= 2 && ones < 4) || ones >= 6; }
constexpr bool superCarryOf(int ones) { return ones >= 4; }

enum class ShiftSide { Left, Right };

/// Full-row logical shift by 1 or 8 positions. Lane-oblivious.
RowValue logicalShift(const RowValue& row, int amount, ShiftSide side);

/// Clears the bits that a composite shift of `amount` moved across lane
/// walls, making the result equal to an independent per-lane shift.
RowValue laneWallMask(int laneWidth, int amount, ShiftSide side);
/// Same masks, precomputed for the legal lane widths.
const RowValue& cachedLaneWallMask(int laneWidth, int amount, ShiftSide side);

inline constexpr std::array<int, 3> kPredicateSources{0, 31, 47};

struct PredicationRegister {
  bool value = false;
  int sourcePosition = 0;
};

/// One lane's predicate, loaded from row-buffer bit `sourcePosition` of
/// lane `lane`. Only positions 0, 31 and 47 are wired.
PredicationRegister loadPredicate(const RowValue& rowBuffer, int lane, int laneWidth,
                                  int sourcePosition);

/// Predicates for every lane of a row in SIMD lock-step.
struct LanePredicate {
  int laneWidth = 64;
  int sourcePosition = 0;
  std::uint64_t mask = 0;  // bit k = predicate of lane k
  RowValue select;         // all bits of the predicated lanes

  bool test(int lane) const { return (mask >> lane) & 1ULL; }
  const RowValue& laneSelect() const { return select; }
};

LanePredicate loadLanePredicates(const RowValue& rowBuffer, int laneWidth, int sourcePosition);

enum class PredAction { Write, Reset, ShiftWrite };

/// Applies `action` to the lanes of `target` whose predicate is set.
/// Write copies `source`; Reset zeroes; ShiftWrite copies `source` after a
/// per-lane logical shift of `shiftAmount` toward `side`.
void predicatedApply(const LanePredicate& pred, PredAction action, RowValue& target,
                     const RowValue& source = {}, int shiftAmount = 1,
                     ShiftSide side = ShiftSide::Right);

/// Per-lane shift of `row` by any amount, composed from 8- and 1-steps
/// followed by a lane-wall mask.
RowValue laneShift(const RowValue& row, int amount, ShiftSide side, int laneWidth);

}  // namespace fpirm
