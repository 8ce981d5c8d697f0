#pragma once

#include <array>
#include <span>
#include <vector>

#include "fpirm/machine.hpp"

namespace fpirm::alu {

inline constexpr int kAddOperands = 5;  // TRD - 2
inline constexpr int kCsaInputs = 7;

/// Output rows of a 7-to-3 reduction. `carry` holds C already moved up one
/// bit and `superCarry` holds C' moved up two bits.
struct CsaRows {
  int sum;
  int carry;
  int superCarry;
};

/// One round of the multi-operand reduction: how many rows enter, how many
/// full 7-groups are reduced and what happens to the remainder.
struct ReductionRound {
  int operands;
  int fullGroups;
  int remainder;
  bool reduceRemainder;  // remainder > 3: zero-padded and reduced
  int result() const { return 3 * fullGroups + (reduceRemainder ? 3 : remainder); }
};

/// Rounds needed to bring `operands` rows down to at most five.
std::vector<ReductionRound> reductionSchedule(int operands);

// Row-level microcode. Operand rows are read, never modified, unless they
// are also listed as outputs.

void csaReduce(Machine& m, std::span<const int> operands, int laneWidth, CsaRows out);

/// Sum of up to five rows over bits [offset, offset+width) of every lane,
/// modulo 2^width, using the sequential carry / super-carry chain. Bits of
/// `dst` outside that range are zero.
void add5(Machine& m, std::span<const int> operands, int dst, int width, int offset, int laneWidth);

/// Reduces any number of rows with 7-to-3 rounds, then finishes with add5.
/// Rows in `operands` are used as scratch and clobbered.
void sumRows(Machine& m, std::vector<int> operands, int dst, int width, int offset, int laneWidth);

/// Unsigned w-bit x w-bit -> 2w-bit product per lane by predicated partial
/// products. Requires 2w <= laneWidth.
void multiply(Machine& m, int a, int b, int dst, int width, int laneWidth);

// Value-level wrappers: stage operands with host writes, run, read back.

struct CsaResult {
  RowValue sum;
  RowValue carry;       // placed (<< 1)
  RowValue superCarry;  // placed (<< 2)
};

CsaResult csaReduce(Machine& m, const std::vector<RowValue>& operands, int laneWidth);
RowValue add5(Machine& m, const std::vector<RowValue>& operands, int width, int offset, int laneWidth);
RowValue multiply(Machine& m, const RowValue& a, const RowValue& b, int width, int laneWidth);

}  // namespace fpirm::alu
