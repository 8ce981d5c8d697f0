#include <sstream>

#include "fpirm/program.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace fpirm;
using test::errorOf;

namespace {

std::string parseError(const std::string& text) {
  try {
    Program::parse(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

nlohmann::json runText(const std::string& text) {
  const auto p = Program::parse(text);
  Machine m({}, true);
  const auto r = p.execute(m);
  return p.traceJson(m, r);
}

/// Operand lanes of the `poke` lines, in order.
std::vector<std::vector<std::uint64_t>> pokedLanes(const std::string& text) {
  std::vector<std::vector<std::uint64_t>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string op;
    ls >> op;
    if (op != "poke") continue;
    int row = 0, w = 0;
    ls >> row >> w;
    std::vector<std::uint64_t> v;
    std::uint64_t x;
    while (ls >> x) v.push_back(x);
    rows.push_back(v);
  }
  return rows;
}

}  // namespace

TEST_CASE("parse errors name the line") {
  CHECK(parseError("poke 10 8 1\nfrobnicate 3\n").find("line 2") != std::string::npos);
  CHECK(parseError("# comment\n\npoke 10 12 1\n").find("line 3") != std::string::npos);
  CHECK(parseError("peek x 8\n").find("line 1") != std::string::npos);
  CHECK(parseError("add5 15 8 0\n").find("line 1") != std::string::npos);
  CHECK(parseError("poke 10 8 0x1G\n").find("line 1") != std::string::npos);
  CHECK(errorOf([] { Program::parse("pred 3\n"); }) == ErrorKind::Program);
  CHECK(errorOf([] { Program::load("/nonexistent/prog.txt"); }) == ErrorKind::Config);
}

TEST_CASE("comments, blank lines and value forms") {
  const auto p = Program::parse("# header\n\npoke 10 32 0x10 16 f1.5  # trailing\npeek 10 32\n");
  REQUIRE(p.instructions().size() == 2);
  CHECK(p.instructions()[0].line == 3);
  CHECK(p.highestRow() == 10);
  const auto j = runText("poke 10 32 0x10 16 f1.5\npeek 10 32\n");
  const auto lanes = j["peeks"][0]["lanes"];
  CHECK(lanes[0] == 16);
  CHECK(lanes[1] == 16);
  CHECK(lanes[2] == oracle::bitsOf(1.5f));
}

TEST_CASE("add5 demo takes one transverse read per result bit") {
  for (int w : {4, 8, 16, 32}) {
    const auto j = runText(Program::demo("add5:" + std::to_string(w), 1));
    CHECK(j["ledger"]["transverseReads"] == w);
  }
}

TEST_CASE("ledger equals the fold of the trace and spans cover every event") {
  for (const std::string demo : {"add5", "multiply:8", "fpmul"}) {
    const auto j = runText(Program::demo(demo, 3));
    const auto events = j["events"].get<std::vector<TraceEvent>>();
    CHECK(CostLedger::fold(events) == j["ledger"].get<CostLedger>());
    std::size_t covered = 0, next = 0;
    for (const auto& ins : j["instructions"]) {
      const std::size_t first = ins["firstEvent"], count = ins["eventCount"];
      if (count) CHECK(first == next);
      next = first + count;
      covered += count;
    }
    CHECK(covered == events.size());
  }
}

TEST_CASE("same program and seed give the same trace") {
  for (const std::string demo : {"add5:16", "multiply:4", "fpmul"}) {
    CHECK(Program::demo(demo, 9) == Program::demo(demo, 9));
    CHECK(Program::demo(demo, 9) != Program::demo(demo, 10));
    CHECK(runText(Program::demo(demo, 9)).dump() == runText(Program::demo(demo, 9)).dump());
  }
  CHECK(errorOf([] { Program::demo("divide", 0); }) == ErrorKind::Config);
  CHECK_FALSE(Program::isDemo("divide"));
}

TEST_CASE("peeked sums agree with host arithmetic") {
  const int w = 16;
  const auto text = Program::demo("add5:16", 5);
  const auto in = pokedLanes(text);
  REQUIRE(in.size() == 5);
  const auto j = runText(text);
  const auto out = j["peeks"][0]["lanes"].get<std::vector<std::uint64_t>>();
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::uint64_t s = 0;
    for (const auto& r : in) s += r[k];
    CHECK(out[k] == (s & ((1ULL << w) - 1)));
  }
}

TEST_CASE("peeked products agree with host arithmetic") {
  const auto text = Program::demo("multiply:8", 6);
  const auto in = pokedLanes(text);
  const auto out = runText(text)["peeks"][0]["lanes"].get<std::vector<std::uint64_t>>();
  for (std::size_t k = 0; k < out.size(); ++k) CHECK(out[k] == in[0][k] * in[1][k]);
}

TEST_CASE("fpmul demo agrees with the oracle") {
  const auto text = Program::demo("fpmul", 7);
  const auto in = pokedLanes(text);
  const auto peeks = runText(text)["peeks"];
  REQUIRE(peeks.size() == 4);
  for (int k = 0; k < 8; ++k) {
    const auto want = oracle::multiply(static_cast<std::uint32_t>(in[0][k]), static_cast<std::uint32_t>(in[1][k]));
    CHECK(peeks[0]["lanes"][k] == want.mantissa);
    CHECK(peeks[1]["lanes"][k] == want.exponent);
    CHECK(peeks[2]["lanes"][k] == want.sign);
    CHECK(((peeks[3]["lanes"][k].get<std::uint64_t>() >> 31) & 1) == want.flag);
  }
}

TEST_CASE("handwritten program using row-buffer primitives") {
  const auto j = runText(
      "poke 20 8 1 2 3 4\n"
      "load 20\n"
      "shl 1 8\n"
      "or 8 0x80\n"
      "store 21\n"
      "peek 21 8\n"
      "bulk xor 20 21\n"
      "store 22\n"
      "read 22 8\n");
  const auto a = j["peeks"][0]["lanes"];
  CHECK(a[0] == 0x82);
  CHECK(a[3] == 8);  // the immediate names lane 0 only
  CHECK(a[4] == 0);
  const auto b = j["peeks"][1]["lanes"];
  CHECK(b[0] == (0x82 ^ 1));
  CHECK(b[3] == (8 ^ 4));
}

TEST_CASE("device errors propagate from execution") {
  const auto p = Program::parse("load 100000\n");
  Machine m;
  CHECK(errorOf([&] { p.execute(m); }) == ErrorKind::CapacityExceeded);
  const auto q = Program::parse("imm 64 1\npred 5 64\n");
  CHECK(errorOf([&] { q.execute(m); }) == ErrorKind::IllegalPredicateSource);
}
