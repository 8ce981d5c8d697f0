#include "fpirm/device.hpp"
#include "support.hpp"

using namespace fpirm;

using test::errorOf;
using test::randomRow;

TEST_CASE("row lanes pack from the least significant end") {
  const auto r = RowValue::fromLanes({1, 2, 3}, 8);
  CHECK(r.lane(0, 8) == 1);
  CHECK(r.lane(2, 8) == 3);
  CHECK(r.lane(3, 8) == 0);
  CHECK(r.bit(9) == 1);
  CHECK(r.bit(8) == 0);
  CHECK(RowValue::broadcast(0x1FF, 8).lane(63, 8) == 0xFF);
  CHECK(RowValue::ones().lane(7, 64) == ~0ULL);
}

TEST_CASE("device config defaults and validation") {
  DeviceConfig c;
  CHECK(c.domains == 32);
  CHECK(c.trd == 7);
  CHECK(c.tileRows == 512);
  CHECK(errorOf([] { DeviceConfig::fromJson({{"domains", 24}}); }) == ErrorKind::Config);
  CHECK(errorOf([] { DeviceConfig::fromJson({{"colour", 1}}); }) == ErrorKind::Config);
  CHECK(errorOf([] { DeviceConfig::fromJson({{"overheadDomains", 2}}); }) == ErrorKind::Config);
  const auto j = DeviceConfig::fromJson({{"domains", 64}, {"trd", 5}});
  CHECK(j.domains == 64);
  CHECK(DeviceConfig::fromJson(j.toJson()).trd == 5);
  const auto file = DeviceConfig::load(FPIRM_SOURCE_DIR "/configs/fpirm.json");
  CHECK(file.domains == 32);
}

TEST_CASE("every data row reaches both ports for all supported depths") {
  for (int d : {16, 32, 64}) {
    DeviceConfig c;
    c.domains = d;
    Dbc dbc(c);
    for (int r = 0; r < d; ++r) {
      CHECK(dbc.canAlign(r, Port::AP0));
      CHECK(dbc.canAlign(r, Port::AP1));
    }
  }
}

TEST_CASE("shift up then down restores the aligned row") {
  Dbc d(DeviceConfig{});
  std::mt19937_64 g(1);
  for (int r = 0; r < d.domains(); ++r) d.poke(r, randomRow(g));
  d.align(10, Port::AP0);
  const RowValue before = d.readRow(Port::AP0);
  d.shift(ShiftDir::Up, 1);
  d.shift(ShiftDir::Down, 1);
  CHECK(d.readRow(Port::AP0) == before);
}

TEST_CASE("shift up by one aligns the next row at ap0") {
  Dbc d(DeviceConfig{});
  for (int r = 0; r < d.domains(); ++r) d.poke(r, RowValue::broadcast(r, 64));
  for (int r = 0; r + 1 < d.domains(); ++r) {
    d.align(r, Port::AP0);
    d.shift(ShiftDir::Up, 1);
    REQUIRE(d.rowAt(Port::AP0));
    CHECK(*d.rowAt(Port::AP0) == r + 1);
    CHECK(d.readRow(Port::AP0) == RowValue::broadcast(r + 1, 64));
  }
}

TEST_CASE("shifting past the overhead domains is rejected") {
  Dbc d(DeviceConfig{});
  d.shift(ShiftDir::Up, d.overhead());
  CHECK(errorOf([&] { d.shift(ShiftDir::Up, 1); }) == ErrorKind::OverheadExceeded);
  CHECK(d.headOffset() == d.overhead());
  d.shift(ShiftDir::Down, 2 * d.overhead());
  CHECK(errorOf([&] { d.shift(ShiftDir::Down, 1); }) == ErrorKind::OverheadExceeded);
}

TEST_CASE("write then read round trips at both ports for every row") {
  Dbc d(DeviceConfig{});
  std::mt19937_64 g(2);
  for (Port ap : {Port::AP0, Port::AP1}) {
    std::vector<RowValue> written(d.domains());
    for (int r = 0; r < d.domains(); ++r) {
      written[r] = randomRow(g);
      d.align(r, ap);
      d.writeRow(ap, written[r]);
    }
    for (int r = d.domains() - 1; r >= 0; --r) {
      d.align(r, ap);
      CHECK(d.readRow(ap) == written[r]);
    }
  }
}

TEST_CASE("ap1 sees the row TRD-1 above the one at ap0") {
  Dbc d(DeviceConfig{});
  std::mt19937_64 g(3);
  std::vector<RowValue> rows(d.domains());
  for (int r = 0; r < d.domains(); ++r) d.poke(r, rows[r] = randomRow(g));
  for (int r = 0; r + d.trd() - 1 < d.domains(); ++r) {
    d.align(r, Port::AP0);
    CHECK(d.readRow(Port::AP1) == rows[r + d.trd() - 1]);
  }
  // Cross-port round trip.
  const RowValue x = randomRow(g);
  d.align(5, Port::AP0);
  d.writeRow(Port::AP1, x);
  d.align(5 + d.trd() - 1, Port::AP0);
  CHECK(d.readRow(Port::AP0) == x);
}

TEST_CASE("a fresh DBC reads zero") {
  Dbc d(DeviceConfig{});
  CHECK(d.readRow(Port::AP0) == RowValue::zeros());
}

TEST_CASE("reading an overhead domain is misaligned") {
  Dbc d(DeviceConfig{});
  d.shift(ShiftDir::Up, d.overhead());
  CHECK_FALSE(d.rowAt(Port::AP1).has_value());
  CHECK(errorOf([&] { d.readRow(Port::AP1); }) == ErrorKind::Misaligned);
  CHECK(errorOf([&] { d.transverseRead(); }) == ErrorKind::Misaligned);
}

TEST_CASE("transverse read equals popcount over every window pattern") {
  Dbc d(DeviceConfig{});
  const int trd = d.trd();
  d.align(4, Port::AP0);
  // Nanowire i carries pattern i mod 2^TRD, so one read covers all patterns.
  for (int r = 0; r < trd; ++r) {
    RowValue v;
    for (int i = 0; i < kRowBits; ++i) v.setBit(i, ((i % (1 << trd)) >> r) & 1);
    d.poke(4 + r, v);
  }
  const auto ones = d.transverseRead();
  for (int i = 0; i < kRowBits; ++i) CHECK(ones[i] == std::popcount(static_cast<unsigned>(i % (1 << trd))));
  CHECK(ones[0b1111111] == 7);
  CHECK(ones[0] == 0);
  CHECK(ones[0b1010110] == 4);
}

TEST_CASE("random shift sequences stay within bounds and are reversible") {
  Dbc d(DeviceConfig{});
  std::mt19937_64 g(4);
  for (int r = 0; r < d.domains(); ++r) d.poke(r, randomRow(g));
  const int start = d.headOffset();
  std::vector<int> moves;
  for (int i = 0; i < 200; ++i) {
    const int s = static_cast<int>(g() % 7) - 3;
    const int next = d.headOffset() + s;
    if (next < -d.overhead() || next > d.overhead()) continue;
    d.shift(s >= 0 ? ShiftDir::Up : ShiftDir::Down, std::abs(s));
    moves.push_back(s);
  }
  for (auto it = moves.rbegin(); it != moves.rend(); ++it)
    d.shift(*it >= 0 ? ShiftDir::Down : ShiftDir::Up, std::abs(*it));
  CHECK(d.headOffset() == start);
}

TEST_CASE("each operation bumps only its own counter") {
  Dbc d(DeviceConfig{});
  auto before = d.ledger();
  d.shift(ShiftDir::Up, 3);
  auto diff = d.ledger() - before;
  CHECK(diff.shifts == 3);
  CHECK(diff.cycles == 3);
  CHECK(diff.reads + diff.writes + diff.transverseReads == 0);

  before = d.ledger();
  d.readRow(Port::AP0);
  diff = d.ledger() - before;
  CHECK(diff.reads == 1);
  CHECK(diff.shifts + diff.writes + diff.transverseReads == 0);

  before = d.ledger();
  d.writeRow(Port::AP0, RowValue::ones());
  diff = d.ledger() - before;
  CHECK(diff.writes == 1);
  CHECK(diff.shifts + diff.reads + diff.transverseReads == 0);

  before = d.ledger();
  d.transverseRead();
  diff = d.ledger() - before;
  CHECK(diff.transverseReads == 1);
  CHECK(diff.shifts + diff.reads + diff.writes == 0);
}

TEST_CASE("trace events fold to the ledger") {
  Trace t;
  t.enable();
  Dbc d(DeviceConfig{}, 0, &t);
  d.align(20, Port::AP1);
  d.writeRow(Port::AP1, RowValue::ones());
  d.align(3, Port::AP0);
  d.transverseRead();
  d.readRow(Port::AP0);
  CHECK(CostLedger::fold(t.events()) == d.ledger());
  const nlohmann::json j = t.events();
  CHECK(j.get<std::vector<TraceEvent>>() == t.events());
}
