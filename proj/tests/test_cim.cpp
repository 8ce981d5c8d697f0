#include <random>

#include "fpirm/cim.hpp"
#include "fpirm/machine.hpp"
#include "support.hpp"

using namespace fpirm;
using test::errorOf;
using test::randomRow;

namespace {

OnesCounts countsOf(int n) {
  OnesCounts c{};
  c.fill(static_cast<std::uint8_t>(n));
  return c;
}

}  // namespace

TEST_CASE("signal examples") {
  auto s = deriveSignals(countsOf(3), 7);
  CHECK(s.xorBits.bit(0));
  CHECK(s.carry.bit(0));
  CHECK_FALSE(s.superCarry.bit(0));

  s = deriveSignals(countsOf(7), 7);
  CHECK(s.xorBits.bit(0));
  CHECK(s.carry.bit(0));
  CHECK(s.superCarry.bit(0));
  CHECK(s.andBits.bit(0));

  s = deriveSignals(countsOf(4), 7);
  CHECK_FALSE(s.xorBits.bit(0));
  CHECK_FALSE(s.carry.bit(0));
  CHECK(s.superCarry.bit(0));
  CHECK_FALSE(s.andBits.bit(0));
  CHECK(s.orBits.bit(0));

  s = deriveSignals(countsOf(0), 7);
  CHECK_FALSE(s.orBits.bit(0));
  CHECK(s.orBits.isZero());
}

TEST_CASE("S + 2C + 4C' equals the column count for every count") {
  for (int n = 0; n <= 7; ++n) {
    const auto s = deriveSignals(countsOf(n), 7);
    for (int i = 0; i < kRowBits; i += 97)
      CHECK(s.xorBits.bit(i) + 2 * s.carry.bit(i) + 4 * s.superCarry.bit(i) == n);
  }
}

TEST_CASE("bit-sliced signals agree with the per-bit truth table") {
  std::mt19937_64 g(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RowValue> rows(7);
    for (auto& r : rows) r = randomRow(g);
    OnesCounts ones{};
    for (int i = 0; i < kRowBits; ++i)
      for (const auto& r : rows) ones[i] += r.bit(i);
    const auto planes = popcountPlanes(rows.data(), 7);
    for (int i = 0; i < kRowBits; ++i) REQUIRE(planes.count(i) == ones[i]);
    for (int operands = 1; operands <= 7; ++operands) {
      const auto a = deriveSignals(ones, operands);
      const auto b = deriveSignalRows(planes, operands);
      CHECK(a.andBits == b.andBits);
      CHECK(a.orBits == b.orBits);
      CHECK(a.xorBits == b.xorBits);
      CHECK(a.carry == b.carry);
      CHECK(a.superCarry == b.superCarry);
    }
  }
}

TEST_CASE("logical shift moves by one or eight only") {
  const auto one = RowValue::fromLanes({1}, 64);
  CHECK(logicalShift(one, 1, ShiftSide::Left) == RowValue::fromLanes({2}, 64));
  CHECK(logicalShift(one, 8, ShiftSide::Left) == RowValue::fromLanes({0x100}, 64));
  CHECK(logicalShift(RowValue::fromLanes({2}, 64), 1, ShiftSide::Right) == one);
  // Crosses the word boundary.
  CHECK(logicalShift(RowValue::fromLanes({1ULL << 63}, 64), 1, ShiftSide::Left).bit(64));
  CHECK(errorOf([&] { logicalShift(one, 2, ShiftSide::Left); }) == ErrorKind::Program);
  CHECK(errorOf([&] { logicalShift(one, 0, ShiftSide::Right); }) == ErrorKind::Program);
}

TEST_CASE("lane shift equals an independent shift of each lane") {
  std::mt19937_64 g(8);
  for (int w : {8, 16, 32, 64}) {
    const auto row = randomRow(g);
    for (int a : {1, 3, 8, 9, 15, w - 1, w}) {
      for (auto side : {ShiftSide::Left, ShiftSide::Right}) {
        const auto got = laneShift(row, a, side, w);
        const std::uint64_t mask = w == 64 ? ~0ULL : (1ULL << w) - 1;
        for (int k = 0; k < kRowBits / w; ++k) {
          const std::uint64_t v = row.lane(k, w);
          std::uint64_t want = 0;
          if (a < 64) want = (side == ShiftSide::Left ? v << a : v >> a) & mask;
          CHECK(got.lane(k, w) == want);
        }
      }
    }
  }
}

TEST_CASE("only bits 0, 31 and 47 feed the predicate") {
  const auto rb = RowValue::ones();
  for (int p : {1, 30, 32, 46, 48, 63})
    CHECK(errorOf([&] { loadLanePredicates(rb, 64, p); }) == ErrorKind::IllegalPredicateSource);
  CHECK(errorOf([&] { loadLanePredicates(rb, 32, 47); }) == ErrorKind::IllegalPredicateSource);
  CHECK(errorOf([&] { loadPredicate(rb, 0, 64, 5); }) == ErrorKind::IllegalPredicateSource);
  for (int p : kPredicateSources) CHECK(loadLanePredicates(rb, 64, p).mask == 0xFF);

  const auto one = loadPredicate(RowValue::fromLanes({0, 1ULL << 47}, 64), 1, 64, 47);
  CHECK(one.value);
  CHECK(one.sourcePosition == 47);
  const auto lanes = loadLanePredicates(RowValue::fromLanes({1, 0, 1}, 8), 8, 0);
  CHECK(lanes.mask == 0b101);
}

TEST_CASE("predicated reset consumes its cycle whether or not it fires") {
  Machine m;
  for (int fire : {0, 1}) {
    m.rbImmediate(RowValue::fromLanes({0x10u + fire, 0xAA}, 64));
    m.loadPredicate(0, 64);
    const auto before = m.ledger();
    m.predicatedResetRb();
    const auto diff = m.ledger() - before;
    CHECK(diff.predicatedOps == 1);
    CHECK(diff.cycles == 1);
    CHECK(m.rb().lane(0, 64) == (fire ? 0 : 0x10));
    CHECK(m.rb().lane(1, 64) == 0xAA);
  }
}

TEST_CASE("predicated write, reset and shift-write touch only selected lanes") {
  const auto pred = loadLanePredicates(RowValue::fromLanes({1, 0, 1, 0}, 16), 16, 0);
  const auto src = RowValue::broadcast(0x00F0, 16);
  auto t = RowValue::broadcast(0x1111, 16);
  predicatedApply(pred, PredAction::Write, t, src);
  CHECK(t.lane(0, 16) == 0x00F0);
  CHECK(t.lane(1, 16) == 0x1111);
  CHECK(t.lane(2, 16) == 0x00F0);

  t = RowValue::broadcast(0x1111, 16);
  predicatedApply(pred, PredAction::Reset, t);
  CHECK(t.lane(0, 16) == 0);
  CHECK(t.lane(3, 16) == 0x1111);

  t = RowValue::zeros();
  predicatedApply(pred, PredAction::ShiftWrite, t, src, 4, ShiftSide::Left);
  CHECK(t.lane(0, 16) == 0x0F00);
  CHECK(t.lane(1, 16) == 0);
}
