#include <numeric>
#include <random>

#include "fpirm/int_alu.hpp"
#include "support.hpp"

using namespace fpirm;
using test::errorOf;
using test::randomRow;

namespace {

std::uint64_t laneMask(int w) { return w == 64 ? ~0ULL : (1ULL << w) - 1; }

}  // namespace

TEST_CASE("seven-input reduction examples") {
  Machine m;
  std::vector<RowValue> zeros(7);
  auto r = alu::csaReduce(m, zeros, 8);
  CHECK(r.sum.isZero());
  CHECK(r.carry.isZero());
  CHECK(r.superCarry.isZero());

  std::vector<RowValue> ones(7, RowValue::broadcast(1, 8));
  r = alu::csaReduce(m, ones, 8);
  CHECK(r.sum == RowValue::broadcast(1, 8));
  CHECK(r.carry == RowValue::broadcast(2, 8));
  CHECK(r.superCarry == RowValue::broadcast(4, 8));
}

TEST_CASE("reduction preserves the lane sum modulo the lane width") {
  std::mt19937_64 g(21);
  Machine m;
  for (int w : {8, 16, 32, 64}) {
    for (int k = 1; k <= 7; ++k) {
      std::vector<RowValue> in(k);
      for (auto& v : in) v = randomRow(g);
      const auto r = alu::csaReduce(m, in, w);
      for (int lane = 0; lane < kRowBits / w; ++lane) {
        std::uint64_t want = 0;
        for (const auto& v : in) want += v.lane(lane, w);
        const std::uint64_t got = r.sum.lane(lane, w) + r.carry.lane(lane, w) + r.superCarry.lane(lane, w);
        CHECK((got & laneMask(w)) == (want & laneMask(w)));
      }
    }
  }
}

TEST_CASE("five-operand add examples") {
  Machine m;
  std::vector<RowValue> in;
  for (std::uint64_t v = 1; v <= 5; ++v) in.push_back(RowValue::broadcast(v, 8));
  CHECK(alu::add5(m, in, 8, 0, 8) == RowValue::broadcast(15, 8));

  // x + 0 + 0 + 0 + 0 = x
  std::mt19937_64 g(22);
  const auto x = randomRow(g);
  std::vector<RowValue> id{x, {}, {}, {}, {}};
  CHECK(alu::add5(m, id, 16, 0, 16) == x);

  // Wraps modulo 2^w.
  std::vector<RowValue> big(5, RowValue::broadcast(0xFF, 8));
  CHECK(alu::add5(m, big, 8, 0, 8) == RowValue::broadcast((5 * 0xFF) & 0xFF, 8));

  std::vector<RowValue> six(6);
  CHECK(errorOf([&] { alu::add5(m, six, 8, 0, 8); }) == ErrorKind::TooManyOperands);
}

TEST_CASE("field add over bits 23..30 writes only that field") {
  Machine m;
  std::mt19937_64 g(23);
  std::vector<RowValue> in(5);
  for (auto& v : in) v = randomRow(g);
  const auto r = alu::add5(m, in, 8, 23, 64);
  for (int lane = 0; lane < 8; ++lane) {
    std::uint64_t want = 0;
    for (const auto& v : in) want += (v.lane(lane, 64) >> 23) & 0xFF;
    CHECK(r.lane(lane, 64) == ((want & 0xFF) << 23));
  }
}

TEST_CASE("add5 microcode issues one transverse read per result bit") {
  for (int w : {8, 16, 32}) {
    Machine m;
    std::vector<int> rows;
    for (int j = 0; j < 5; ++j) rows.push_back(m.allocate(1));
    const int dst = m.allocate(1);
    const auto before = m.ledger();
    alu::add5(m, rows, dst, w, 0, w);
    CHECK((m.ledger() - before).transverseReads == static_cast<std::uint64_t>(w));
  }
}

TEST_CASE("reduction schedule ends at five operands or fewer") {
  CHECK(alu::reductionSchedule(5).empty());
  CHECK(alu::reductionSchedule(1).empty());
  for (int n = 6; n <= 300; ++n) {
    const auto s = alu::reductionSchedule(n);
    REQUIRE_FALSE(s.empty());
    CHECK(s.front().operands == n);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto& r = s[i];
      CHECK(r.fullGroups == r.operands / 7);
      CHECK(r.remainder == r.operands % 7);
      CHECK(r.result() < r.operands);
      if (i + 1 < s.size()) CHECK(s[i + 1].operands == r.result());
      if (i + 1 < s.size()) CHECK(r.result() > 5);
    }
    CHECK(s.back().result() <= 5);
  }
}

TEST_CASE("sumRows adds any number of rows") {
  std::mt19937_64 g(24);
  for (int n : {1, 2, 6, 7, 8, 13, 24, 49}) {
    Machine m;
    std::vector<int> rows;
    std::vector<RowValue> vals;
    for (int j = 0; j < n; ++j) {
      rows.push_back(m.allocate(1));
      vals.push_back(randomRow(g));
      m.poke(rows.back(), vals.back());
    }
    const int dst = m.allocate(1);
    alu::sumRows(m, rows, dst, 32, 0, 32);
    for (int lane = 0; lane < 16; ++lane) {
      std::uint64_t want = 0;
      for (const auto& v : vals) want += v.lane(lane, 32);
      CHECK(m.peek(dst).lane(lane, 32) == (want & 0xFFFFFFFF));
    }
  }
}

TEST_CASE("multiply examples and packing rules") {
  Machine m;
  const auto p = alu::multiply(m, RowValue::broadcast(3, 16), RowValue::broadcast(5, 16), 8, 16);
  CHECK(p == RowValue::broadcast(15, 16));
  const auto q = alu::multiply(m, RowValue::broadcast(255, 16), RowValue::broadcast(255, 16), 8, 16);
  CHECK(q == RowValue::broadcast(255 * 255, 16));
  CHECK(errorOf([&] { alu::multiply(m, {}, {}, 16, 16); }) == ErrorKind::LanePackingError);
  CHECK(errorOf([&] { alu::multiply(m, {}, {}, 8, 12); }) == ErrorKind::LanePackingError);
}

TEST_CASE("24-bit mantissa products") {
  std::mt19937_64 g(25);
  Machine m;
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<std::uint64_t> a(8), b(8);
    for (int k = 0; k < 8; ++k) {
      a[k] = (g() & 0x7FFFFF) | 0x800000;
      b[k] = (g() & 0x7FFFFF) | 0x800000;
    }
    const auto p = alu::multiply(m, RowValue::fromLanes(a, 64), RowValue::fromLanes(b, 64), 24, 64);
    for (int k = 0; k < 8; ++k) CHECK(p.lane(k, 64) == a[k] * b[k]);
  }
}

TEST_CASE("lanes are independent") {
  // Changing one lane's operands leaves every other lane's product unchanged.
  std::mt19937_64 g(26);
  Machine m;
  auto a = randomRow(g) & RowValue::broadcast(0xFF, 16);
  auto b = randomRow(g) & RowValue::broadcast(0xFF, 16);
  const auto base = alu::multiply(m, a, b, 8, 16);
  a.setLane(5, 16, 0xFF);
  b.setLane(5, 16, 0xFF);
  const auto changed = alu::multiply(m, a, b, 8, 16);
  for (int k = 0; k < 32; ++k)
    if (k != 5) CHECK(changed.lane(k, 16) == base.lane(k, 16));
  CHECK(changed.lane(5, 16) == 0xFF * 0xFF);
}

TEST_CASE("multiply cost does not depend on operand values") {
  std::mt19937_64 g(27);
  std::vector<std::uint64_t> cycles;
  for (int trial = 0; trial < 3; ++trial) {
    Machine m;
    const int a = m.allocate(1), b = m.allocate(1), dst = m.allocate(1);
    m.poke(a, randomRow(g) & RowValue::broadcast(0xFFFF, 64));
    m.poke(b, trial == 0 ? RowValue{} : randomRow(g) & RowValue::broadcast(0xFFFF, 64));
    alu::multiply(m, a, b, dst, 16, 64);
    cycles.push_back(m.ledger().cycles);
  }
  CHECK(cycles[0] == cycles[1]);
  CHECK(cycles[1] == cycles[2]);
}

TEST_CASE("multiply cycles grow linearly in the operand width") {
  std::vector<double> w, c;
  for (int width : {8, 16, 24, 32}) {
    Machine m;
    const int a = m.allocate(1), b = m.allocate(1), dst = m.allocate(1);
    alu::multiply(m, a, b, dst, width, 64);
    w.push_back(width);
    c.push_back(static_cast<double>(m.ledger().cycles));
  }
  const double n = 4;
  const double mw = std::accumulate(w.begin(), w.end(), 0.0) / n;
  const double mc = std::accumulate(c.begin(), c.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (w[i] - mw) * (c[i] - mc);
    sxx += (w[i] - mw) * (w[i] - mw);
    syy += (c[i] - mc) * (c[i] - mc);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  CHECK(r2 >= 0.99);
  CHECK(c[3] > c[0]);
}
