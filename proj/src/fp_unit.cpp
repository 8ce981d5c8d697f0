#include "fpirm/fp_unit.hpp"

#include <string>

#include "fpirm/errors.hpp"
#include "fpirm/int_alu.hpp"

namespace fpirm::fp {

namespace {

RowValue bc(std::uint64_t v) { return RowValue::broadcast(v, kLane); }

void maskTo(Machine& m, int src, std::uint64_t mask, int dst) {
  m.load(src);
  m.rbLogic(LogicOp::And, bc(mask));
  m.store(dst);
}

/// Predicate from bit `pos` of `row`, optionally inverted first.
void predicateFrom(Machine& m, int row, int pos, bool inverted = false) {
  m.load(row);
  if (inverted) m.rbInvert();
  m.loadPredicate(pos, kLane);
}

void resetWherePredicated(Machine& m, std::initializer_list<int> rows) {
  m.rbImmediate(RowValue::zeros());
  for (int r : rows) m.storePredicated(r);
}

/// Predicated per-lane shift of `row` in place.
void shiftWherePredicated(Machine& m, int row, int amount, ShiftSide side) {
  m.load(row);
  m.rbShift(amount, side, kLane);
  m.storePredicated(row);
}

/// 9-bit add at the exponent field.
void exponentAdd(Machine& m, std::initializer_list<int> rows, int dst) {
  alu::add5(m, std::span<const int>(rows.begin(), rows.size()), dst, kExponentAddWidth,
            kExponentOffset, kLane);
}

/// dst = bit 31 of (x) OR bit 31 of (x + 1 in the field): the exponent in
/// `x` is outside 0..254.
void rangeFlag(Machine& m, int x, int dst) {
  Machine::Frame f(m);
  const int one = m.allocate(1);
  const int bumped = m.allocate(1);
  m.writeImmediate(one, bc(kHiddenOne));
  exponentAdd(m, {x, one}, bumped);
  const int both[] = {x, bumped};
  m.bulk(LogicOp::Or, both);
  m.rbLogic(LogicOp::And, bc(kSignMask));
  m.store(dst);
}

/// dst bit 31 = exponent field of `e` is nonzero.
void nonzeroField(Machine& m, int e, int scratchConst, int dst) {
  exponentAdd(m, {e, scratchConst}, dst);
}

/// OR of many rows at bit 31, seven at a time through the TR window.
void orFlags(Machine& m, std::span<const int> rows, int dst) {
  std::size_t done = 0;
  bool first = true;
  while (done < rows.size() || first) {
    std::vector<int> group;
    if (!first) group.push_back(dst);
    while (group.size() < 7 && done < rows.size()) group.push_back(rows[done++]);
    m.bulk(LogicOp::Or, group);
    m.rbLogic(LogicOp::And, bc(kSignMask));
    m.store(dst);
    first = false;
  }
}

}  // namespace

TripleRows allocateTriple(Machine& m) {
  const int base = m.allocate(4);
  return {base, base + 1, base + 2, base + 3};
}

void fpMultiply(Machine& m, int a, int b, TripleRows out) {
  Machine::Frame f(m);
  const int ma = m.allocate(1), mb = m.allocate(1);
  const int ea = m.allocate(1), eb = m.allocate(1);
  const int one = m.allocate(1), bias = m.allocate(1), e9 = m.allocate(1);
  const int c = m.allocate(1), nza = m.allocate(1), nzb = m.allocate(1);

  // Significands with the hidden one, then their exact 48-bit product.
  for (auto [src, dst] : {std::pair{a, ma}, std::pair{b, mb}}) {
    m.load(src);
    m.rbLogic(LogicOp::And, bc(kFractionMask));
    m.rbLogic(LogicOp::Or, bc(kHiddenOne));
    m.store(dst);
  }
  alu::multiply(m, ma, mb, out.mantissa, 24, kLane);

  // Products below 2.0 move up so that 1.0 sits at bit 47 in every lane.
  predicateFrom(m, out.mantissa, kMantissaTop, true);
  shiftWherePredicated(m, out.mantissa, 1, ShiftSide::Left);
  m.writeImmediate(one, bc(kHiddenOne));
  resetWherePredicated(m, {one});

  maskTo(m, a, kExponentMask, ea);
  maskTo(m, b, kExponentMask, eb);
  m.writeImmediate(bias, bc(kBiasCorrection));
  exponentAdd(m, {ea, eb, bias, one}, e9);
  rangeFlag(m, e9, out.flag);
  maskTo(m, e9, kExponentMask, out.exponent);

  // A zero result field flushes the value.
  m.writeImmediate(c, bc(kExponentMask));
  nonzeroField(m, out.exponent, c, nza);
  predicateFrom(m, nza, 31, true);
  resetWherePredicated(m, {out.mantissa, out.exponent});

  // Zero (or subnormal) inputs give zero.
  nonzeroField(m, ea, c, nza);
  nonzeroField(m, eb, c, nzb);
  const int nz[] = {nza, nzb};
  m.bulk(LogicOp::And, nz);
  m.rbInvert();
  m.loadPredicate(31, kLane);
  resetWherePredicated(m, {out.mantissa, out.exponent, out.flag});

  maskTo(m, a, kSignMask, ea);
  maskTo(m, b, kSignMask, eb);
  const int signs[] = {ea, eb};
  m.bulk(LogicOp::Xor, signs);
  m.store(out.sign);
}

void decompose(Machine& m, int packed, TripleRows out) {
  Machine::Frame f(m);
  const int c = m.allocate(1), nz = m.allocate(1);
  m.load(packed);
  m.rbLogic(LogicOp::And, bc(kFractionMask));
  m.rbLogic(LogicOp::Or, bc(kHiddenOne));
  m.rbShift(kMantissaTop - kExponentOffset, ShiftSide::Left, kLane);
  m.store(out.mantissa);
  maskTo(m, packed, kExponentMask, out.exponent);
  maskTo(m, packed, kSignMask, out.sign);
  m.writeImmediate(out.flag, RowValue::zeros());
  m.writeImmediate(c, bc(kExponentMask));
  nonzeroField(m, out.exponent, c, nz);
  predicateFrom(m, nz, 31, true);
  resetWherePredicated(m, {out.mantissa});
}

void findMax(Machine& m, std::span<const int> rows, int dst, int width, int offset, int laneWidth) {
  if (laneWidth != kLane)
    throw Error(ErrorKind::LanePackingError, "findMax shifts survivors upward and needs 64-bit lanes");
  if (width < 1 || offset < 0 || width + offset > 32)
    throw Error(ErrorKind::LanePackingError, "findMax field must lie within bits 0..31");
  const int k = static_cast<int>(rows.size());
  if (k < 1 || k > m.trd())
    throw Error(ErrorKind::TooManyOperands, "findMax takes 1 to 7 rows, got " + std::to_string(k));
  // Copies with the field's top bit at the predicate position 31.
  const int pre = 32 - offset - width;
  const int base = m.scratchBase();
  for (int j = 0; j < k; ++j) {
    m.load(rows[j]);
    m.rbShift(pre, ShiftSide::Left, laneWidth);
    m.store(base + j);
  }
  for (int j = k; j < m.trd(); ++j) m.padScratch(j, false);

  for (int round = 0; round < width; ++round) {
    m.transverseRead(base, m.trd());  // latched OR: any candidate has a one here
    for (int j = 0; j < k; ++j) {
      m.load(base + j);
      m.loadPredicateOrAndNotRb(31, laneWidth);
      m.rbShift(1, ShiftSide::Left, laneWidth);
      m.predicatedResetRb();
      m.store(base + j);
    }
  }
  // Survivors all equal the maximum; their OR restores it.
  m.transverseRead(base, m.trd());
  m.rbFromLatch(Signal::Or);
  m.rbShift(width + pre, ShiftSide::Right, laneWidth);
  m.store(dst);
}

void maxTournament(Machine& m, std::span<const int> rows, int dst, int width, int offset,
                   int laneWidth) {
  if (rows.empty()) throw Error(ErrorKind::TooManyOperands, "maximum of no rows");
  const int k = m.trd();
  if (static_cast<int>(rows.size()) <= k) {
    findMax(m, rows, dst, width, offset, laneWidth);
    return;
  }
  Machine::Frame f(m);
  const int groups = (static_cast<int>(rows.size()) + k - 1) / k;
  const int winners = m.allocate(groups);
  std::vector<int> next;
  for (int g = 0; g < groups; ++g) {
    const std::size_t lo = static_cast<std::size_t>(g) * k;
    const std::size_t n = std::min<std::size_t>(k, rows.size() - lo);
    findMax(m, rows.subspan(lo, n), winners + g, width, offset, laneWidth);
    next.push_back(winners + g);
  }
  maxTournament(m, next, dst, width, offset, laneWidth);
}

void normMantissa(Machine& m, int mantissa, int maxExponent, int exponent, int dst) {
  Machine::Frame f(m);
  const int inv = m.allocate(1), one = m.allocate(1), diff = m.allocate(1);
  m.load(exponent);
  m.rbLogic(LogicOp::Xor, bc(kInvertExponent));
  m.store(inv);
  m.writeImmediate(one, bc(kHiddenOne));
  exponentAdd(m, {maxExponent, inv, one}, diff);

  m.load(mantissa);
  m.store(dst);
  // Difference bits 7..0 arrive at bit 31 one at a time.
  for (int bit = 7; bit >= 0; --bit) {
    m.load(diff);
    m.rbShift(1, ShiftSide::Left, kLane);
    m.store(diff);
    m.loadPredicate(31, kLane);
    if (bit >= 6) {
      resetWherePredicated(m, {dst});
      continue;
    }
    const int amount = bit >= 3 ? 8 : 1;
    const int repeats = 1 << (bit % 3);
    for (int r = 0; r < repeats; ++r) shiftWherePredicated(m, dst, amount, ShiftSide::Right);
  }
}

void normSum(Machine& m, int sum, int maxExponent, int dst, int flagDst) {
  Machine::Frame f(m);
  const int sign = m.allocate(1), mag = m.allocate(1), one = m.allocate(1);
  const int scanHigh = m.allocate(1), scanLow = m.allocate(1);
  const int seen = m.allocate(1), seenNow = m.allocate(1), expAdd = m.allocate(1);
  const int exp9 = m.allocate(1), fraction = m.allocate(1), field = m.allocate(1);
  const int c = m.allocate(1), nz = m.allocate(1);

  // Sign from bit 63 to bit 31; negative sums become magnitudes.
  m.load(sum);
  m.rbShift(32, ShiftSide::Right, kLane);
  m.rbLogic(LogicOp::And, bc(kSignMask));
  m.store(sign);
  m.loadPredicate(31, kLane);
  m.load(sum);
  m.store(mag);
  m.rbInvert();
  m.storePredicated(mag);
  m.writeImmediate(one, RowValue::zeros());
  m.rbImmediate(bc(1));
  m.storePredicated(one);
  const int magOps[] = {mag, one};
  alu::add5(m, magOps, mag, 64, 0, kLane);

  // Leading-one scan, always sampled at bit 47: first bits 62..47 of a copy
  // moved down by 15, then bits 46..0 of an unshifted copy.
  m.load(mag);
  m.store(scanLow);
  m.rbShift(62 - kMantissaTop, ShiftSide::Right, kLane);
  m.store(scanHigh);
  m.writeImmediate(seen, RowValue::zeros());
  m.writeImmediate(expAdd, RowValue::zeros());

  const auto scanStep = [&](int scanRow, std::int64_t exponentStep) {
    const int a[] = {scanRow, seen};
    m.bulk(LogicOp::Or, a);
    m.store(seenNow);
    const int b[] = {seenNow, seen};
    m.bulk(LogicOp::Xor, b);  // first sighting of the leading one
    m.loadPredicate(kMantissaTop, kLane);
    const auto field9 = static_cast<std::uint64_t>(exponentStep) & 0x1FF;
    m.rbImmediate(bc(field9 << kExponentOffset));
    m.storePredicated(expAdd);
  };

  for (int i = 62 - kMantissaTop; i >= 0; --i) {
    scanStep(scanHigh, i);
    // Once the leading one has been passed, every further step moves the
    // magnitude down by one.
    predicateFrom(m, seen, kMantissaTop);
    shiftWherePredicated(m, mag, 1, ShiftSide::Right);
    m.load(seenNow);
    m.store(seen);
    m.load(scanHigh);
    m.rbShift(1, ShiftSide::Left, kLane);
    m.store(scanHigh);
  }
  const int bridge = kMantissaTop - kExponentOffset;  // 24
  for (int i = 1; i <= kMantissaTop; ++i) {
    m.load(scanLow);
    m.rbShift(1, ShiftSide::Left, kLane);
    m.store(scanLow);
    scanStep(scanLow, -i);
    if (i <= bridge) {
      predicateFrom(m, seen, kMantissaTop);
      shiftWherePredicated(m, mag, 1, ShiftSide::Right);
    } else {
      predicateFrom(m, seen, kMantissaTop, true);
      shiftWherePredicated(m, mag, 1, ShiftSide::Left);
    }
    m.load(seenNow);
    m.store(seen);
  }

  exponentAdd(m, {maxExponent, expAdd}, exp9);
  rangeFlag(m, exp9, flagDst);

  maskTo(m, mag, kFractionMask, fraction);
  maskTo(m, exp9, kExponentMask, field);
  const int parts[] = {fraction, field, sign};
  m.bulk(LogicOp::Or, parts);
  m.store(dst);

  // +0 for a zero sum or a zero result field.
  m.writeImmediate(c, bc(kExponentMask));
  nonzeroField(m, field, c, nz);
  m.load(seen);
  m.rbShift(kMantissaTop - 31, ShiftSide::Right, kLane);
  m.store(c);
  const int live[] = {nz, c};
  m.bulk(LogicOp::And, live);
  m.rbInvert();
  m.loadPredicate(31, kLane);
  resetWherePredicated(m, {dst});
}

void fpAdd(Machine& m, std::span<const TripleRows> operands, int dst, int flagDst) {
  const int n = static_cast<int>(operands.size());
  if (n < 1) throw Error(ErrorKind::TooManyOperands, "fpAdd needs at least one operand");
  Machine::Frame f(m);
  const int maxE = m.allocate(1);
  const int terms = m.allocate(2 * n);
  const int total = m.allocate(1);
  const int sumFlag = m.allocate(1);

  std::vector<int> exps;
  for (const auto& t : operands) exps.push_back(t.exponent);
  maxTournament(m, exps, maxE);

  for (int i = 0; i < n; ++i) {
    const int hi = terms + 2 * i;
    normMantissa(m, operands[i].mantissa, maxE, operands[i].exponent, hi);
    m.writeImmediate(hi + 1, RowValue::zeros());
    // Negative terms: invert here, +1 through the companion row.
    predicateFrom(m, operands[i].sign, 31);
    m.load(hi);
    m.rbInvert();
    m.storePredicated(hi);
    m.rbImmediate(bc(1));
    m.storePredicated(hi + 1);
  }
  std::vector<int> rows(2 * n);
  for (int i = 0; i < 2 * n; ++i) rows[i] = terms + i;
  alu::sumRows(m, std::move(rows), total, 64, 0, kLane);
  normSum(m, total, maxE, dst, sumFlag);

  std::vector<int> flags;
  for (const auto& t : operands) flags.push_back(t.flag);
  flags.push_back(sumFlag);
  orFlags(m, flags, flagDst);
}

TripleValue fpMultiply(Machine& m, const RowValue& a, const RowValue& b) {
  Machine::Frame f(m);
  const int in = m.allocate(2);
  m.poke(in, a);
  m.poke(in + 1, b);
  const auto out = allocateTriple(m);
  fpMultiply(m, in, in + 1, out);
  return {m.peek(out.mantissa), m.peek(out.exponent), m.peek(out.sign), m.peek(out.flag)};
}

TripleValue decompose(Machine& m, const RowValue& packed) {
  Machine::Frame f(m);
  const int in = m.allocate(1);
  m.poke(in, packed);
  const auto out = allocateTriple(m);
  decompose(m, in, out);
  return {m.peek(out.mantissa), m.peek(out.exponent), m.peek(out.sign), m.peek(out.flag)};
}

RowValue findMax(Machine& m, const std::vector<RowValue>& rows, int width, int offset, int laneWidth) {
  Machine::Frame f(m);
  const int in = m.allocate(static_cast<int>(rows.size()) + 1);
  std::vector<int> idx;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    m.poke(in + static_cast<int>(j), rows[j]);
    idx.push_back(in + static_cast<int>(j));
  }
  const int dst = in + static_cast<int>(rows.size());
  findMax(m, idx, dst, width, offset, laneWidth);
  return m.peek(dst);
}

RowValue maxTournament(Machine& m, const std::vector<RowValue>& rows, int width, int offset,
                       int laneWidth) {
  Machine::Frame f(m);
  const int in = m.allocate(static_cast<int>(rows.size()) + 1);
  std::vector<int> idx;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    m.poke(in + static_cast<int>(j), rows[j]);
    idx.push_back(in + static_cast<int>(j));
  }
  const int dst = in + static_cast<int>(rows.size());
  maxTournament(m, idx, dst, width, offset, laneWidth);
  return m.peek(dst);
}

RowValue normMantissa(Machine& m, const RowValue& mantissa, const RowValue& maxExponent,
                      const RowValue& exponent) {
  Machine::Frame f(m);
  const int in = m.allocate(4);
  m.poke(in, mantissa);
  m.poke(in + 1, maxExponent);
  m.poke(in + 2, exponent);
  normMantissa(m, in, in + 1, in + 2, in + 3);
  return m.peek(in + 3);
}

PackedValue normSum(Machine& m, const RowValue& sum, const RowValue& maxExponent) {
  Machine::Frame f(m);
  const int in = m.allocate(4);
  m.poke(in, sum);
  m.poke(in + 1, maxExponent);
  normSum(m, in, in + 1, in + 2, in + 3);
  return {m.peek(in + 2), m.peek(in + 3)};
}

PackedValue fpAdd(Machine& m, const std::vector<TripleValue>& operands) {
  Machine::Frame f(m);
  std::vector<TripleRows> rows;
  for (const auto& t : operands) {
    const auto r = allocateTriple(m);
    m.poke(r.mantissa, t.mantissa);
    m.poke(r.exponent, t.exponent);
    m.poke(r.sign, t.sign);
    m.poke(r.flag, t.flag);
    rows.push_back(r);
  }
  const int out = m.allocate(2);
  fpAdd(m, rows, out, out + 1);
  return {m.peek(out), m.peek(out + 1)};
}

}  // namespace fpirm::fp
