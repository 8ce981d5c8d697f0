#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fpirm/machine.hpp"

namespace fpirm::fp {

// Single-precision values travel in the low half of 64-bit lanes, eight per
// row. All procedures chop; nothing rounds.
inline constexpr int kLane = 64;
inline constexpr int kLanesPerRow = kRowBits / kLane;

inline constexpr std::uint64_t kFractionMask = 0x7FFFFF;
inline constexpr std::uint64_t kHiddenOne = 0x800000;       // also +1 in the exponent field
inline constexpr std::uint64_t kExponentMask = 0x7F800000;
inline constexpr std::uint64_t kSignMask = 0x80000000;
inline constexpr std::uint64_t kBiasCorrection = 0xC0800000;  // -127, 9-bit field at bit 23
inline constexpr std::uint64_t kInvertExponent = 0xFF800000;
inline constexpr int kExponentOffset = 23;
inline constexpr int kExponentAddWidth = 9;  // field plus the out-of-range bit 31
inline constexpr int kMantissaTop = 47;      // 1.0 in a decomposed mantissa

/// Row numbers of a decomposed value. `flag` carries the out-of-range
/// indicator at bit 31 of each lane.
struct TripleRows {
  int mantissa;
  int exponent;
  int sign;
  int flag;
};

/// Allocates the four rows of a triple.
TripleRows allocateTriple(Machine& m);

// Row-level microcode. Inputs are never modified.

void fpMultiply(Machine& m, int a, int b, TripleRows out);

/// Splits packed singles into a triple with the mantissa at bit 47.
void decompose(Machine& m, int packed, TripleRows out);

/// Maximum of up to seven rows by per-bit elimination over the field
/// [offset, offset+width); other bits of the inputs must be zero.
/// `width + offset` may not exceed 32.
void findMax(Machine& m, std::span<const int> rows, int dst, int width = 8, int offset = 23,
             int laneWidth = kLane);

/// findMax applied in rounds of seven until one row remains.
void maxTournament(Machine& m, std::span<const int> rows, int dst, int width = 8, int offset = 23,
                   int laneWidth = kLane);

/// `mantissa` logically shifted right by (maxE - exponent), flushed to zero
/// when the difference reaches 64.
void normMantissa(Machine& m, int mantissa, int maxExponent, int exponent, int dst);

/// Renormalizes a signed 64-bit mantissa sum against `maxExponent` and
/// packs it. A zero sum yields +0.
void normSum(Machine& m, int sum, int maxExponent, int dst, int flagDst);

/// Sum of decomposed values, packed. `flagDst` gets the OR of every input
/// flag and the range flag of the result.
void fpAdd(Machine& m, std::span<const TripleRows> operands, int dst, int flagDst);

// Value-level wrappers; staging is uncharged.

struct TripleValue {
  RowValue mantissa;
  RowValue exponent;
  RowValue sign;
  RowValue flag;
};

struct PackedValue {
  RowValue packed;
  RowValue flag;
};

TripleValue fpMultiply(Machine& m, const RowValue& a, const RowValue& b);
TripleValue decompose(Machine& m, const RowValue& packed);
RowValue findMax(Machine& m, const std::vector<RowValue>& rows, int width = 8, int offset = 23,
                 int laneWidth = kLane);
RowValue maxTournament(Machine& m, const std::vector<RowValue>& rows, int width = 8, int offset = 23,
                       int laneWidth = kLane);
RowValue normMantissa(Machine& m, const RowValue& mantissa, const RowValue& maxExponent,
                      const RowValue& exponent);
PackedValue normSum(Machine& m, const RowValue& sum, const RowValue& maxExponent);
PackedValue fpAdd(Machine& m, const std::vector<TripleValue>& operands);

}  // namespace fpirm::fp
