#include "suites.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <thread>

#include "fpirm/errors.hpp"
#include "fpirm/fp_unit.hpp"
#include "fpirm/int_alu.hpp"
#include "fpirm/kernels.hpp"
#include "fpirm/machine.hpp"
#include "oracle.hpp"

namespace fpirm::verify {

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json CheckResult::toJson() const {
  nlohmann::json j = {{"name", name},
                      {"cases", cases},
                      {"failures", failures},
                      {"passed", passed()}};
  if (!reproducer.is_null()) j["reproducer"] = reproducer;
  return j;
}

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
}

nlohmann::json SuiteReport::toJson() const {
  nlohmann::json j = {{"suite", suite},
                      {"seed", options.seed},
                      {"trials", options.trials},
                      {"mutate", options.mutate},
                      {"passed", passed()}};
  auto& arr = j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) arr.push_back(c.toJson());
  return j;
}

void Trial::expect(bool ok, const std::function<nlohmann::json()>& describe) {
  ++cases;
  if (ok) return;
  ++failures;
  if (!first) first = describe();
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

std::mt19937_64 trialRng(std::uint64_t seed, const std::string& name, long trial) {
  const std::uint64_t h = fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

std::uint64_t widthMask(int w) { return w >= 64 ? ~0ULL : (1ULL << w) - 1; }

int laneFor(int bits) {
  int lane = 8;
  while (lane < bits) lane *= 2;
  return lane;
}

/// A random finite normal single.
std::uint32_t randomNormal(std::mt19937_64& g, int loExp = 1, int hiExp = 254) {
  const std::uint32_t e = loExp + static_cast<std::uint32_t>(g() % (hiExp - loExp + 1));
  return static_cast<std::uint32_t>((g() & 0x807FFFFFULL) | (static_cast<std::uint64_t>(e) << 23));
}

RowValue packSingles(const std::vector<std::uint32_t>& v) {
  std::vector<std::uint64_t> lanes(v.begin(), v.end());
  return RowValue::fromLanes(lanes, fp::kLane);
}

std::uint64_t flagLane(bool f) { return f ? 0x80000000ULL : 0; }

fp::TripleValue toRows(const std::vector<oracle::Triple>& lanes) {
  std::vector<std::uint64_t> m, e, s, f;
  for (const auto& t : lanes) {
    m.push_back(t.mantissa);
    e.push_back(t.exponent);
    s.push_back(t.sign);
    f.push_back(flagLane(t.flag));
  }
  return {RowValue::fromLanes(m, fp::kLane), RowValue::fromLanes(e, fp::kLane), RowValue::fromLanes(s, fp::kLane),
          RowValue::fromLanes(f, fp::kLane)};
}

nlohmann::json tripleJson(const oracle::Triple& t) {
  return {{"mantissa", hex(t.mantissa)}, {"exponent", hex(t.exponent)}, {"sign", hex(t.sign)}, {"flag", t.flag}};
}

nlohmann::json tripleJson(const fp::TripleValue& v, int lane) {
  return {{"mantissa", hex(v.mantissa.lane(lane, fp::kLane))},
          {"exponent", hex(v.exponent.lane(lane, fp::kLane))},
          {"sign", hex(v.sign.lane(lane, fp::kLane))},
          {"flag", v.flag.lane(lane, fp::kLane) != 0}};
}

/// Rows in a DBC other than the CIM DBC.
int farRows(Machine& m, int count) {
  const int first = m.allocate(count + m.domains());
  return std::max(first, m.domains());
}

}  // namespace

CheckResult runTrials(const Options& o, const std::string& name, long trials, const TrialFn& fn) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult res;
  res.name = name;
  long firstTrial = -1;
  std::mutex mu;
  auto worker = [&](int k, int stride) {
    Trial local;
    long localFirst = -1;
    for (long t = k; t < trials; t += stride) {
      Trial tr;
      auto g = trialRng(o.seed, name, t);
      try {
        fn(t, g, tr);
      } catch (const std::exception& e) {
        ++tr.cases;
        ++tr.failures;
        if (!tr.first) tr.first = nlohmann::json{{"error", e.what()}};
      }
      local.cases += tr.cases;
      local.failures += tr.failures;
      if (tr.first && (localFirst < 0 || t < localFirst)) {
        localFirst = t;
        local.first = tr.first;
      }
    }
    std::lock_guard lock(mu);
    res.cases += local.cases;
    res.failures += local.failures;
    if (local.first && (firstTrial < 0 || localFirst < firstTrial)) {
      firstTrial = localFirst;
      res.reproducer = *local.first;
    }
  };
  const int workers = static_cast<int>(std::clamp<long>(o.workers, 1, std::max(1L, trials)));
  if (workers == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < workers; ++k) pool.emplace_back(worker, k, workers);
    for (auto& t : pool) t.join();
  }
  if (firstTrial >= 0) {
    res.reproducer["check"] = name;
    res.reproducer["seed"] = o.seed;
    res.reproducer["trial"] = firstTrial;
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

// ---- device -----------------------------------------------------------------

CheckResult deviceShiftReadback(const Options& o, long trials) {
  return runTrials(o, "device.shift_readback", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Dbc d(o.device);
    std::vector<RowValue> model(d.domains());
    for (int r = 0; r < d.domains(); ++r) {
      model[r] = RowValue::broadcast(g(), 64);
      d.poke(r, model[r]);
    }
    std::uint64_t expectedShifts = 0;
    int reads = 0;
    for (int step = 0; step < 64; ++step) {
      const int row = static_cast<int>(g() % d.domains());
      const Port ap = g() & 1 ? Port::AP1 : Port::AP0;
      expectedShifts += static_cast<std::uint64_t>(std::abs(d.shiftToAlign(row, ap)));
      d.align(row, ap);
      if (g() & 1) {
        model[row] = RowValue::broadcast(g(), 64);
        d.writeRow(ap, model[row]);
      } else {
        RowValue got = d.readRow(ap);
        if (mutated(o, t, reads++)) got = got ^ RowValue::broadcast(1, 64);
        out.expect(got == model[row], [&] {
          return nlohmann::json{{"step", step}, {"row", row}, {"port", static_cast<int>(ap)}};
        });
      }
      out.expect(std::abs(d.headOffset()) <= d.overhead(), [&] {
        return nlohmann::json{{"step", step}, {"headOffset", d.headOffset()}};
      });
    }
    for (int r = 0; r < d.domains(); ++r)
      out.expect(d.peek(r) == model[r], [&] { return nlohmann::json{{"row", r}, {"what", "final contents"}}; });
    out.expect(d.ledger().shifts == expectedShifts, [&] {
      return nlohmann::json{{"shifts", d.ledger().shifts}, {"expected", expectedShifts}};
    });
  });
}

CheckResult deviceOverheadBound(const Options& o) {
  return runTrials(o, "device.overhead_bound", 2, [&](long t, std::mt19937_64&, Trial& out) {
    Dbc d(o.device);
    const ShiftDir dir = t == 0 ? ShiftDir::Up : ShiftDir::Down;
    d.shift(dir, d.overhead());
    const int at = d.headOffset();
    bool threw = false;
    try {
      d.shift(dir, 1);
    } catch (const Error& e) {
      threw = e.kind() == ErrorKind::OverheadExceeded;
    }
    if (mutated(o, t, 0)) threw = !threw;
    out.expect(threw && d.headOffset() == at, [&] {
      return nlohmann::json{{"direction", t == 0 ? "up" : "down"}, {"threw", threw}, {"headOffset", d.headOffset()}};
    });
  });
}

CheckResult deviceTransverseRead(const Options& o, long trials) {
  return runTrials(o, "device.transverse_read", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Dbc d(o.device);
    for (int r = 0; r < d.domains(); ++r) {
      RowValue v;
      for (int k = 0; k < kRowBits / 64; ++k) v.setLane(k, 64, g() & g());  // vary the density
      d.poke(r, v);
    }
    const int base = static_cast<int>(g() % (d.domains() - d.trd() + 1));
    d.align(base, Port::AP0);
    const auto ones = d.transverseRead();
    for (int i = 0; i < kRowBits; ++i) {
      int expected = 0;
      for (int r = base; r < base + d.trd(); ++r) expected += d.peek(r).bit(i);
      const int got = ones[i] + (mutated(o, t, i) ? 1 : 0);
      out.expect(got == expected, [&] {
        return nlohmann::json{{"base", base}, {"nanowire", i}, {"got", got}, {"expected", expected}};
      });
    }
  });
}

CheckResult deviceBulkLogic(const Options& o, long trials) {
  return runTrials(o, "device.bulk_logic", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    const int k = 1 + static_cast<int>(g() % m.trd());
    const LogicOp op = static_cast<LogicOp>(g() % 3);
    const int base = farRows(m, k);
    std::vector<int> rows;
    std::vector<RowValue> vals;
    for (int i = 0; i < k; ++i) {
      RowValue v;
      for (int w = 0; w < kRowBits / 64; ++w) v.setLane(w, 64, g());
      m.poke(base + i, v);
      rows.push_back(base + i);
      vals.push_back(v);
    }
    m.bulk(op, rows);
    RowValue expected = vals[0];
    for (int i = 1; i < k; ++i)
      expected = op == LogicOp::And ? expected & vals[i] : op == LogicOp::Or ? expected | vals[i] : expected ^ vals[i];
    for (int w = 0; w < kRowBits / 64; ++w) {
      std::uint64_t got = m.rb().lane(w, 64);
      if (mutated(o, t, w)) got ^= 1;
      out.expect(got == expected.lane(w, 64), [&] {
        return nlohmann::json{{"op", static_cast<int>(op)}, {"operands", k}, {"word", w},
                              {"got", hex(got)}, {"expected", hex(expected.lane(w, 64))}};
      });
    }
  });
}

CheckResult devicePredicatedStore(const Options& o, long trials) {
  return runTrials(o, "device.predicated_store", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    static constexpr int kPositions[] = {0, 31, 47};
    const int pos = kPositions[g() % 3];
    const int lane = pos == 47 ? 64 : pos == 31 ? (g() & 1 ? 32 : 64) : laneFor(8 << (g() % 4));
    const int r = farRows(m, 3);
    std::vector<std::uint64_t> src(kRowBits / lane), val(kRowBits / lane), dst(kRowBits / lane);
    for (auto* v : {&src, &val, &dst})
      for (auto& x : *v) x = g() & widthMask(lane);
    m.poke(r, RowValue::fromLanes(src, lane));
    m.poke(r + 1, RowValue::fromLanes(val, lane));
    m.poke(r + 2, RowValue::fromLanes(dst, lane));
    m.load(r);
    m.loadPredicate(pos, lane);
    m.load(r + 1);
    m.storePredicated(r + 2);
    const RowValue res = m.peek(r + 2);
    for (int k = 0; k < kRowBits / lane; ++k) {
      const std::uint64_t expected = (src[k] >> pos) & 1 ? val[k] : dst[k];
      std::uint64_t got = res.lane(k, lane);
      if (mutated(o, t, k)) got ^= 1;
      out.expect(got == expected, [&] {
        return nlohmann::json{{"position", pos}, {"laneWidth", lane}, {"lane", k}, {"source", hex(src[k])},
                              {"got", hex(got)}, {"expected", hex(expected)}};
      });
    }
  });
}

CheckResult deviceLaneShift(const Options& o, long trials) {
  return runTrials(o, "device.lane_shift", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    const int lane = 8 << (g() % 4);
    const int amount = 1 + static_cast<int>(g() % (lane - 1));
    const ShiftSide side = g() & 1 ? ShiftSide::Left : ShiftSide::Right;
    std::vector<std::uint64_t> x(kRowBits / lane);
    for (auto& v : x) v = g() & widthMask(lane);
    m.rbImmediate(RowValue::fromLanes(x, lane));
    m.rbShift(amount, side, lane);
    for (int k = 0; k < kRowBits / lane; ++k) {
      const std::uint64_t expected = side == ShiftSide::Left ? (x[k] << amount) & widthMask(lane) : x[k] >> amount;
      std::uint64_t got = m.rb().lane(k, lane);
      if (mutated(o, t, k)) got ^= 1;
      out.expect(got == expected, [&] {
        return nlohmann::json{{"laneWidth", lane}, {"amount", amount}, {"left", side == ShiftSide::Left},
                              {"value", hex(x[k])}, {"got", hex(got)}, {"expected", hex(expected)}};
      });
    }
  });
}

// ---- integer ----------------------------------------------------------------

CheckResult intMultiplyExhaustive8(const Options& o) {
  constexpr int kLane = 16, kPerRow = kRowBits / kLane;
  return runTrials(o, "int.multiply.w8.exhaustive", 65536 / kPerRow, [&](long t, std::mt19937_64&, Trial& out) {
    Machine m(o.device);
    std::vector<std::uint64_t> a(kPerRow), b(kPerRow);
    for (int k = 0; k < kPerRow; ++k) {
      const long pair = t * kPerRow + k;
      a[k] = pair & 0xFF;
      b[k] = pair >> 8;
    }
    const RowValue p = alu::multiply(m, RowValue::fromLanes(a, kLane), RowValue::fromLanes(b, kLane), 8, kLane);
    for (int k = 0; k < kPerRow; ++k) {
      std::uint64_t got = p.lane(k, kLane);
      if (mutated(o, t, k)) got ^= 1;
      out.expect(got == a[k] * b[k], [&] {
        return nlohmann::json{{"a", a[k]}, {"b", b[k]}, {"got", got}, {"expected", a[k] * b[k]}};
      });
    }
  });
}

CheckResult intMultiply(const Options& o, int width, long pairs) {
  const int lane = laneFor(2 * width), perRow = kRowBits / lane;
  const std::string name = "int.multiply.w" + std::to_string(width);
  return runTrials(o, name, (pairs + perRow - 1) / perRow, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    std::vector<std::uint64_t> a(perRow), b(perRow);
    for (int k = 0; k < perRow; ++k) {
      a[k] = g() & widthMask(width);
      b[k] = g() & widthMask(width);
    }
    const RowValue p = alu::multiply(m, RowValue::fromLanes(a, lane), RowValue::fromLanes(b, lane), width, lane);
    for (int k = 0; k < perRow; ++k) {
      std::uint64_t got = p.lane(k, lane);
      if (mutated(o, t, k)) got ^= 1;
      out.expect(got == a[k] * b[k], [&] {
        return nlohmann::json{{"width", width}, {"laneWidth", lane}, {"a", hex(a[k])}, {"b", hex(b[k])},
                              {"got", hex(got)}, {"expected", hex(a[k] * b[k])}};
      });
    }
  });
}

CheckResult intAdd5(const Options& o, int width, long cases) {
  const int perRow = kRowBits / width;
  const std::string name = "int.add5.w" + std::to_string(width);
  return runTrials(o, name, (cases + perRow - 1) / perRow, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    const int n = 1 + static_cast<int>(g() % alu::kAddOperands);
    std::vector<std::vector<std::uint64_t>> ops(n, std::vector<std::uint64_t>(perRow));
    std::vector<RowValue> rows;
    for (auto& op : ops) {
      for (auto& v : op) v = g() & widthMask(width);
      rows.push_back(RowValue::fromLanes(op, width));
    }
    const RowValue s = alu::add5(m, rows, width, 0, width);
    for (int k = 0; k < perRow; ++k) {
      std::uint64_t expected = 0;
      for (const auto& op : ops) expected += op[k];
      expected &= widthMask(width);
      std::uint64_t got = s.lane(k, width);
      if (mutated(o, t, k)) got ^= 1;
      out.expect(got == expected, [&] {
        nlohmann::json in = nlohmann::json::array();
        for (const auto& op : ops) in.push_back(hex(op[k]));
        return nlohmann::json{{"width", width}, {"operands", in}, {"got", hex(got)}, {"expected", hex(expected)}};
      });
    }
  });
}

CheckResult intAdd5Field(const Options& o, long trials) {
  return runTrials(o, "int.add5.field", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    const int width = 2 + static_cast<int>(g() % 31);
    const int offset = static_cast<int>(g() % (64 - width + 1));
    const int n = 1 + static_cast<int>(g() % alu::kAddOperands);
    std::vector<std::vector<std::uint64_t>> ops(n, std::vector<std::uint64_t>(fp::kLanesPerRow));
    std::vector<RowValue> rows;
    for (auto& op : ops) {
      for (auto& v : op) v = g();
      rows.push_back(RowValue::fromLanes(op, 64));
    }
    const RowValue s = alu::add5(m, rows, width, offset, 64);
    for (int k = 0; k < fp::kLanesPerRow; ++k) {
      std::uint64_t expected = 0;
      for (const auto& op : ops) expected += op[k] >> offset;
      expected &= widthMask(width);
      std::uint64_t got = (s.lane(k, 64) >> offset) & widthMask(width);
      if (mutated(o, t, k)) got ^= 1;
      out.expect(got == expected, [&] {
        return nlohmann::json{{"width", width}, {"offset", offset}, {"operands", n},
                              {"got", hex(got)}, {"expected", hex(expected)}};
      });
    }
  });
}

CheckResult intCsaReduce(const Options& o, int width, long cases) {
  const int perRow = kRowBits / width;
  const std::string name = "int.csa.w" + std::to_string(width);
  return runTrials(o, name, (cases + perRow - 1) / perRow, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    const int n = 1 + static_cast<int>(g() % alu::kCsaInputs);
    std::vector<std::vector<std::uint64_t>> ops(n, std::vector<std::uint64_t>(perRow));
    std::vector<RowValue> rows;
    for (auto& op : ops) {
      for (auto& v : op) v = g() & widthMask(width);
      rows.push_back(RowValue::fromLanes(op, width));
    }
    const auto r = alu::csaReduce(m, rows, width);
    for (int k = 0; k < perRow; ++k) {
      // Column by column, then the placed carries cut at the lane wall.
      std::uint64_t s = 0, c = 0, cc = 0, total = 0;
      for (int i = 0; i < width; ++i) {
        int ones = 0;
        for (const auto& op : ops) ones += (op[k] >> i) & 1;
        const auto col = oracle::column(ones);
        s |= static_cast<std::uint64_t>(col.sum) << i;
        if (i + 1 < width) c |= static_cast<std::uint64_t>(col.carry) << (i + 1);
        if (i + 2 < width) cc |= static_cast<std::uint64_t>(col.superCarry) << (i + 2);
      }
      for (const auto& op : ops) total += op[k];
      std::uint64_t gs = r.sum.lane(k, width);
      const std::uint64_t gc = r.carry.lane(k, width), gcc = r.superCarry.lane(k, width);
      if (mutated(o, t, k)) gs ^= 1;
      const bool identity = ((gs + gc + gcc) & widthMask(width)) == (total & widthMask(width));
      out.expect(gs == s && gc == c && gcc == cc && identity, [&] {
        return nlohmann::json{{"width", width}, {"operands", n},
                              {"got", {hex(gs), hex(gc), hex(gcc)}}, {"expected", {hex(s), hex(c), hex(cc)}}};
      });
    }
  });
}

CheckResult intCsaColumns(const Options& o) {
  return runTrials(o, "int.csa.columns", 1, [&](long t, std::mt19937_64&, Trial& out) {
    Machine m(o.device);
    // Nanowire j holds (j mod 8) ones when TRD is 7; every count 0..TRD occurs.
    const int trd = m.trd();
    for (int r = 0; r < trd; ++r) {
      RowValue v;
      for (int j = 0; j < kRowBits; ++j)
        if (r < j % (trd + 1)) v.setBit(j, true);
      m.poke(r, v);
    }
    const auto& s = m.transverseRead(0, trd);
    for (int j = 0; j < kRowBits; ++j) {
      const int ones = j % (trd + 1);
      const auto col = oracle::column(ones);
      int gotSum = s.xorBits.bit(j);
      if (mutated(o, t, j)) gotSum ^= 1;
      const bool ok = gotSum == col.sum && s.carry.bit(j) == col.carry && s.superCarry.bit(j) == col.superCarry &&
                      s.andBits.bit(j) == (ones == trd) && s.orBits.bit(j) == (ones > 0);
      // S + 2C + 4C' must give back the count.
      out.expect(ok && gotSum + 2 * col.carry + 4 * col.superCarry == ones, [&] {
        return nlohmann::json{{"ones", ones},
                              {"got", {gotSum, int(s.carry.bit(j)), int(s.superCarry.bit(j))}},
                              {"expected", {col.sum, col.carry, col.superCarry}}};
      });
    }
  });
}

CheckResult intSumRows(const Options& o, long trials) {
  return runTrials(o, "int.sum_rows", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    constexpr int kLane = 32, kPerRow = kRowBits / kLane;
    const int n = 1 + static_cast<int>(g() % 40);
    const int base = farRows(m, n + 1);
    std::vector<int> rows;
    std::vector<std::uint64_t> expected(kPerRow, 0);
    for (int i = 0; i < n; ++i) {
      std::vector<std::uint64_t> v(kPerRow);
      for (int k = 0; k < kPerRow; ++k) {
        v[k] = g() & 0xFFFFFFFFULL;
        expected[k] += v[k];
      }
      m.poke(base + i, RowValue::fromLanes(v, kLane));
      rows.push_back(base + i);
    }
    alu::sumRows(m, rows, base + n, kLane, 0, kLane);
    const RowValue s = m.peek(base + n);
    for (int k = 0; k < kPerRow; ++k) {
      std::uint64_t got = s.lane(k, kLane);
      if (mutated(o, t, k)) got ^= 1;
      out.expect(got == (expected[k] & 0xFFFFFFFFULL), [&] {
        return nlohmann::json{{"operands", n}, {"lane", k}, {"got", hex(got)},
                              {"expected", hex(expected[k] & 0xFFFFFFFFULL)}};
      });
    }
  });
}

// ---- floating point ---------------------------------------------------------

namespace {

void compareTriples(const Options& o, long t, Trial& out, const fp::TripleValue& got,
                    const std::vector<oracle::Triple>& expected, const std::function<nlohmann::json(int)>& inputs) {
  for (int k = 0; k < static_cast<int>(expected.size()); ++k) {
    const auto& e = expected[k];
    std::uint64_t mant = got.mantissa.lane(k, fp::kLane);
    if (mutated(o, t, k)) mant ^= 1;
    const bool ok = mant == e.mantissa && got.exponent.lane(k, fp::kLane) == e.exponent &&
                    got.sign.lane(k, fp::kLane) == e.sign && got.flag.lane(k, fp::kLane) == flagLane(e.flag);
    out.expect(ok, [&] {
      auto j = inputs(k);
      j["got"] = tripleJson(got, k);
      j["got"]["mantissa"] = hex(mant);
      j["expected"] = tripleJson(e);
      return j;
    });
  }
}

void comparePacked(const Options& o, long t, Trial& out, const fp::PackedValue& got,
                   const std::vector<oracle::Packed>& expected, const std::function<nlohmann::json(int)>& inputs) {
  for (int k = 0; k < static_cast<int>(expected.size()); ++k) {
    std::uint64_t bits = got.packed.lane(k, fp::kLane);
    if (mutated(o, t, k)) bits ^= 1;
    const bool flag = got.flag.lane(k, fp::kLane) != 0;
    const bool ok = bits == expected[k].bits && got.flag.lane(k, fp::kLane) == flagLane(expected[k].flag);
    out.expect(ok, [&] {
      auto j = inputs(k);
      j["got"] = {{"bits", hex(bits)}, {"flag", flag}};
      j["expected"] = {{"bits", hex(expected[k].bits)}, {"flag", expected[k].flag}};
      return j;
    });
  }
}

/// Edge-case singles: signed zeros, subnormals, extreme normals, ones.
std::uint32_t edgeSingle(std::mt19937_64& g) {
  const std::uint32_t sign = g() & 1 ? 0x80000000u : 0;
  switch (g() % 7) {
    case 0: return sign;
    case 1: return sign | static_cast<std::uint32_t>(1 + g() % 0x7FFFFF);
    case 2: return sign | 0x00800000u | static_cast<std::uint32_t>(g() & 0x7FFFFF);
    case 3: return sign | 0x7F000000u | static_cast<std::uint32_t>(g() & 0x7FFFFF);
    case 4: return sign | 0x3F800000u;
    case 5: return sign | 0x3FFFFFFFu;
    default: return randomNormal(g);
  }
}

}  // namespace

CheckResult fpMultiply(const Options& o, long pairs) {
  const long rows = (pairs + fp::kLanesPerRow - 1) / fp::kLanesPerRow;
  return runTrials(o, "fp.multiply", rows, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    std::vector<std::uint32_t> a(fp::kLanesPerRow), b(fp::kLanesPerRow);
    std::vector<oracle::Triple> expected;
    for (int k = 0; k < fp::kLanesPerRow; ++k) {
      a[k] = randomNormal(g);
      b[k] = randomNormal(g);
      expected.push_back(oracle::multiply(a[k], b[k]));
    }
    const auto got = fp::fpMultiply(m, packSingles(a), packSingles(b));
    compareTriples(o, t, out, got, expected,
                   [&](int k) { return nlohmann::json{{"a", hex(a[k])}, {"b", hex(b[k])}}; });
  });
}

CheckResult fpMultiplyEdges(const Options& o, long trials) {
  return runTrials(o, "fp.multiply.edges", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    std::vector<std::uint32_t> a(fp::kLanesPerRow), b(fp::kLanesPerRow);
    std::vector<oracle::Triple> expected;
    for (int k = 0; k < fp::kLanesPerRow; ++k) {
      a[k] = edgeSingle(g);
      b[k] = edgeSingle(g);
      expected.push_back(oracle::multiply(a[k], b[k]));
    }
    const auto got = fp::fpMultiply(m, packSingles(a), packSingles(b));
    compareTriples(o, t, out, got, expected,
                   [&](int k) { return nlohmann::json{{"a", hex(a[k])}, {"b", hex(b[k])}}; });
  });
}

CheckResult fpDecompose(const Options& o, long trials) {
  return runTrials(o, "fp.decompose", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    std::vector<std::uint32_t> x(fp::kLanesPerRow);
    std::vector<oracle::Triple> expected;
    for (auto& v : x) {
      v = edgeSingle(g);
      expected.push_back(oracle::decompose(v));
    }
    const auto got = fp::decompose(m, packSingles(x));
    compareTriples(o, t, out, got, expected, [&](int k) { return nlohmann::json{{"x", hex(x[k])}}; });
  });
}

CheckResult fpNormSum(const Options& o, long trials) {
  return runTrials(o, "fp.norm_sum", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    std::vector<std::uint64_t> sum(fp::kLanesPerRow), maxE(fp::kLanesPerRow);
    std::vector<oracle::Packed> expected;
    for (int k = 0; k < fp::kLanesPerRow; ++k) {
      // Magnitudes up to 2^57; the leading one anywhere from bit 0.
      const int lead = static_cast<int>(g() % 58);
      std::uint64_t mag = g() & widthMask(lead + 1);
      if (g() % 8 == 0) mag = 0;
      sum[k] = g() & 1 ? ~mag + 1 : mag;
      maxE[k] = (1 + g() % 254) << 23;
      expected.push_back(oracle::normalizeSum(sum[k], maxE[k]));
    }
    const auto got = fp::normSum(m, RowValue::fromLanes(sum, fp::kLane), RowValue::fromLanes(maxE, fp::kLane));
    comparePacked(o, t, out, got, expected,
                  [&](int k) { return nlohmann::json{{"sum", hex(sum[k])}, {"maxExponent", hex(maxE[k])}}; });
  });
}

CheckResult fpAdd(const Options& o, int n, long cases, AddErrorStats* stats) {
  const long rows = (cases + fp::kLanesPerRow - 1) / fp::kLanesPerRow;
  std::mutex mu;
  return runTrials(o, "fp.add.n" + std::to_string(n), rows, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    std::vector<std::vector<std::uint32_t>> a(n, std::vector<std::uint32_t>(fp::kLanesPerRow)), b = a;
    std::vector<fp::TripleValue> terms;
    std::vector<std::vector<oracle::Triple>> lanes(fp::kLanesPerRow);
    for (int i = 0; i < n; ++i) {
      std::vector<oracle::Triple> row;
      for (int k = 0; k < fp::kLanesPerRow; ++k) {
        a[i][k] = randomNormal(g, 112, 142);
        b[i][k] = randomNormal(g, 112, 142);
        row.push_back(oracle::multiply(a[i][k], b[i][k]));
        lanes[k].push_back(row.back());
      }
      terms.push_back(toRows(row));
    }
    std::vector<oracle::Packed> expected;
    for (const auto& l : lanes) expected.push_back(oracle::add(l));
    const auto got = fp::fpAdd(m, terms);
    comparePacked(o, t, out, got, expected, [&](int k) {
      nlohmann::json ins = nlohmann::json::array();
      for (int i = 0; i < n; ++i) ins.push_back({hex(a[i][k]), hex(b[i][k])});
      return nlohmann::json{{"n", n}, {"lane", k}, {"factors", ins}};
    });
    if (!stats) return;
    AddErrorStats local;
    for (int k = 0; k < fp::kLanesPerRow; ++k) {
      float ieee = 0;
      double exact = 0, absSum = 0;
      for (int i = 0; i < n; ++i) {
        const float fa = oracle::asFloat(a[i][k]), fb = oracle::asFloat(b[i][k]);
        ieee += fa * fb;
        const double p = static_cast<double>(fa) * fb;
        exact += p;
        absSum += std::fabs(p);
      }
      if (std::fabs(exact) < 0.5 * absSum || ieee == 0) continue;
      const double sim = oracle::asFloat(static_cast<std::uint32_t>(got.packed.lane(k, fp::kLane)));
      const double rel = std::fabs(sim - ieee) / std::fabs(ieee);
      ++local.nonCancelling;
      if (rel <= n * std::ldexp(1.0, -23)) ++local.withinBound;
      local.worst = std::max(local.worst, rel);
    }
    std::lock_guard lock(mu);
    stats->nonCancelling += local.nonCancelling;
    stats->withinBound += local.withinBound;
    stats->worst = std::max(stats->worst, local.worst);
  });
}

CheckResult fpFindMax(const Options& o, long trials) {
  return runTrials(o, "fp.find_max", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    const int n = 1 + static_cast<int>(g() % 7);
    std::vector<RowValue> rows;
    std::vector<std::uint64_t> expected(fp::kLanesPerRow, 0);
    for (int i = 0; i < n; ++i) {
      std::vector<std::uint64_t> v(fp::kLanesPerRow);
      for (int k = 0; k < fp::kLanesPerRow; ++k) {
        v[k] = (g() & 0xFF) << fp::kExponentOffset;
        expected[k] = std::max(expected[k], v[k]);
      }
      rows.push_back(RowValue::fromLanes(v, fp::kLane));
    }
    const RowValue r = fp::findMax(m, rows);
    for (int k = 0; k < fp::kLanesPerRow; ++k) {
      std::uint64_t got = r.lane(k, fp::kLane);
      if (mutated(o, t, k)) got ^= 1;
      out.expect(got == expected[k], [&] {
        nlohmann::json in = nlohmann::json::array();
        for (const auto& row : rows) in.push_back(hex(row.lane(k, fp::kLane)));
        return nlohmann::json{{"inputs", in}, {"got", hex(got)}, {"expected", hex(expected[k])}};
      });
    }
  });
}

CheckResult fpFindMaxOrderings(const Options& o, long baseSets) {
  return runTrials(o, "fp.find_max.orderings", baseSets, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    std::vector<std::uint64_t> set;
    while (set.size() < 7) {
      const std::uint64_t e = g() & 0xFF;
      if (std::find(set.begin(), set.end(), e) == set.end()) set.push_back(e);
    }
    const std::uint64_t expected = *std::max_element(set.begin(), set.end()) << fp::kExponentOffset;
    std::vector<int> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    // Eight orderings per call, one per lane; 5040 orderings fill 630 rows.
    std::vector<std::vector<int>> pending;
    long index = 0;
    auto flush = [&] {
      std::vector<RowValue> rows(7);
      for (int slot = 0; slot < 7; ++slot)
        for (int k = 0; k < static_cast<int>(pending.size()); ++k)
          rows[slot].setLane(k, fp::kLane, set[pending[k][slot]] << fp::kExponentOffset);
      const RowValue r = fp::findMax(m, rows);
      for (int k = 0; k < static_cast<int>(pending.size()); ++k) {
        std::uint64_t got = r.lane(k, fp::kLane);
        if (mutated(o, t, static_cast<int>(index + k))) got ^= 1;
        out.expect(got == expected, [&] {
          nlohmann::json order = nlohmann::json::array();
          for (int s : pending[k]) order.push_back(set[s]);
          return nlohmann::json{{"exponents", order}, {"got", hex(got)}, {"expected", hex(expected)}};
        });
      }
      index += static_cast<long>(pending.size());
      pending.clear();
    };
    do {
      pending.push_back(perm);
      if (pending.size() == fp::kLanesPerRow) flush();
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (!pending.empty()) flush();
  });
}

// ---- kernels ----------------------------------------------------------------

CheckResult kernelRelu(const Options& o, long trials) {
  return runTrials(o, "kernels.relu", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    std::vector<std::uint32_t> x(fp::kLanesPerRow);
    for (auto& v : x) v = edgeSingle(g);
    const RowValue r = kernels::relu(m, packSingles(x));
    for (int k = 0; k < fp::kLanesPerRow; ++k) {
      const std::uint64_t expected = x[k] & 0x80000000u ? 0 : x[k];
      std::uint64_t got = r.lane(k, fp::kLane);
      if (mutated(o, t, k)) got ^= 1;
      out.expect(got == expected, [&] {
        return nlohmann::json{{"x", hex(x[k])}, {"got", hex(got)}, {"expected", hex(expected)}};
      });
    }
  });
}

CheckResult kernelMaxPool(const Options& o, long trials) {
  return runTrials(o, "kernels.max_pool", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    const int n = 1 + static_cast<int>(g() % 16);
    std::vector<RowValue> rows(n);
    std::vector<float> best(fp::kLanesPerRow, 0.0f);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < fp::kLanesPerRow; ++k) {
        const std::uint32_t v = g() % 8 == 0 ? 0 : randomNormal(g) & 0x7FFFFFFFu;
        rows[i].setLane(k, fp::kLane, v);
        best[k] = i == 0 ? oracle::asFloat(v) : std::max(best[k], oracle::asFloat(v));
      }
    const RowValue r = kernels::maxPool(m, rows);
    for (int k = 0; k < fp::kLanesPerRow; ++k) {
      std::uint64_t got = r.lane(k, fp::kLane);
      if (mutated(o, t, k)) got ^= 1;
      out.expect(got == oracle::bitsOf(best[k]), [&] {
        return nlohmann::json{{"window", n}, {"lane", k}, {"got", hex(got)}, {"expected", hex(oracle::bitsOf(best[k]))}};
      });
    }
  });
}

CheckResult kernelRotate180(const Options& o, int k, long trials) {
  return runTrials(o, "kernels.rotate180.k" + std::to_string(k), trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    constexpr int kLane = 32;
    std::vector<RowValue> rows(k);
    for (auto& r : rows)
      for (int j = 0; j < k; ++j) r.setLane(j, kLane, g() & 0xFFFFFFFFULL);
    const auto rot = kernels::rotate180(m, rows);
    const auto back = kernels::rotate180(m, rot);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        std::uint64_t got = rot[i].lane(j, kLane);
        if (mutated(o, t, i * k + j)) got ^= 1;
        const std::uint64_t expected = rows[k - 1 - i].lane(k - 1 - j, kLane);
        out.expect(got == expected && back[i].lane(j, kLane) == rows[i].lane(j, kLane), [&] {
          return nlohmann::json{{"k", k}, {"row", i}, {"column", j}, {"got", hex(got)}, {"expected", hex(expected)}};
        });
      }
    // Lanes past the matrix stay clear.
    for (int i = 0; i < k; ++i)
      for (int j = k; j < kRowBits / kLane; ++j)
        out.expect(rot[i].lane(j, kLane) == 0, [&] { return nlohmann::json{{"k", k}, {"row", i}, {"spill", j}}; });
  });
}

namespace {

/// Chunked window sum: 49 products per fpAdd, then partial sums packed,
/// decomposed with their flags, and added in groups of 49.
oracle::Packed windowOracle(const std::vector<std::uint32_t>& w, const std::vector<std::uint32_t>& x) {
  const std::size_t k = kernels::kMaxTermsPerAdd;
  std::vector<oracle::Packed> partial;
  for (std::size_t lo = 0; lo < w.size(); lo += k) {
    std::vector<oracle::Triple> terms;
    for (std::size_t i = lo; i < std::min(w.size(), lo + k); ++i) terms.push_back(oracle::multiply(w[i], x[i]));
    partial.push_back(oracle::add(terms));
  }
  while (partial.size() > 1) {
    std::vector<oracle::Packed> next;
    for (std::size_t lo = 0; lo < partial.size(); lo += k) {
      std::vector<oracle::Triple> terms;
      for (std::size_t i = lo; i < std::min(partial.size(), lo + k); ++i) {
        auto tr = oracle::decompose(partial[i].bits);
        tr.flag = partial[i].flag;
        terms.push_back(tr);
      }
      next.push_back(oracle::add(terms));
    }
    partial = next;
  }
  return partial.front();
}

}  // namespace

CheckResult kernelConvWindow(const Options& o, long trials) {
  return runTrials(o, "kernels.conv_window", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    // Mostly short windows, with a share beyond one fpAdd.
    const int n = g() % 4 == 0 ? 50 + static_cast<int>(g() % 100) : 1 + static_cast<int>(g() % 49);
    std::vector<RowValue> w(n), x(n);
    std::vector<std::vector<std::uint32_t>> wl(fp::kLanesPerRow, std::vector<std::uint32_t>(n)), xl = wl;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < fp::kLanesPerRow; ++k) {
        wl[k][i] = randomNormal(g, 115, 130);
        xl[k][i] = g() % 8 == 0 ? 0 : randomNormal(g, 115, 130);
        w[i].setLane(k, fp::kLane, wl[k][i]);
        x[i].setLane(k, fp::kLane, xl[k][i]);
      }
    const auto got = kernels::convWindow(m, w, x);
    std::vector<oracle::Packed> expected;
    for (int k = 0; k < fp::kLanesPerRow; ++k) expected.push_back(windowOracle(wl[k], xl[k]));
    comparePacked(o, t, out, got, expected, [&](int k) {
      nlohmann::json ws = nlohmann::json::array(), xs = nlohmann::json::array();
      for (int i = 0; i < n; ++i) {
        ws.push_back(hex(wl[k][i]));
        xs.push_back(hex(xl[k][i]));
      }
      return nlohmann::json{{"terms", n}, {"lane", k}, {"weights", ws}, {"inputs", xs}};
    });
  });
}

CheckResult kernelWeightUpdate(const Options& o, long trials) {
  return runTrials(o, "kernels.weight_update", trials, [&](long t, std::mt19937_64& g, Trial& out) {
    Machine m(o.device);
    std::vector<std::uint32_t> w(fp::kLanesPerRow), lr(fp::kLanesPerRow), dw(fp::kLanesPerRow);
    std::vector<oracle::Packed> expected;
    for (int k = 0; k < fp::kLanesPerRow; ++k) {
      w[k] = randomNormal(g, 110, 135);
      lr[k] = randomNormal(g, 110, 125) & 0x7FFFFFFFu;
      dw[k] = randomNormal(g, 110, 135);
      auto step = oracle::multiply(lr[k], dw[k]);
      step.sign ^= 0x80000000u;
      expected.push_back(oracle::add({oracle::decompose(w[k]), step}));
    }
    const auto got = kernels::weightUpdate(m, packSingles(w), packSingles(lr), packSingles(dw));
    comparePacked(o, t, out, got, expected, [&](int k) {
      return nlohmann::json{{"w", hex(w[k])}, {"lr", hex(lr[k])}, {"dw", hex(dw[k])}};
    });
  });
}

// ---- suites -----------------------------------------------------------------

std::vector<std::string> suiteNames() { return {"device", "int", "fp", "kernels"}; }

SuiteReport runSuite(const std::string& name, const Options& o) {
  SuiteReport rep;
  rep.suite = name;
  rep.options = o;
  const long n = std::max(1L, o.trials);
  auto add = [&](CheckResult c) { rep.checks.push_back(std::move(c)); };
  const bool all = name == "all";
  bool known = all;
  if (all || name == "device") {
    known = true;
    add(deviceShiftReadback(o, n));
    add(deviceOverheadBound(o));
    add(deviceTransverseRead(o, n));
    add(deviceBulkLogic(o, n));
    add(devicePredicatedStore(o, n));
    add(deviceLaneShift(o, n));
  }
  if (all || name == "int") {
    known = true;
    add(intMultiplyExhaustive8(o));
    for (int w : {16, 24, 32}) add(intMultiply(o, w, n * 8));
    for (int w : {8, 16, 32, 64}) add(intAdd5(o, w, n * (kRowBits / w)));
    add(intAdd5Field(o, n));
    for (int w : {8, 16, 32, 64}) add(intCsaReduce(o, w, n * (kRowBits / w)));
    add(intCsaColumns(o));
    add(intSumRows(o, n));
  }
  if (all || name == "fp") {
    known = true;
    add(fpMultiply(o, n * fp::kLanesPerRow));
    add(fpMultiplyEdges(o, n));
    add(fpDecompose(o, n));
    add(fpNormSum(o, n));
    for (int k : {2, 7, 9}) add(fpAdd(o, k, n * fp::kLanesPerRow));
    for (int k : {27, 49}) add(fpAdd(o, k, std::max(1L, n / 8) * fp::kLanesPerRow));
    add(fpFindMax(o, n));
  }
  if (all || name == "kernels") {
    known = true;
    add(kernelRelu(o, n));
    add(kernelMaxPool(o, n));
    for (int k : {3, 5, 7, 9, 11}) add(kernelRotate180(o, k, std::max(1L, n / 8)));
    add(kernelConvWindow(o, std::max(1L, n / 4)));
    add(kernelWeightUpdate(o, n));
  }
  if (!known) throw Error(ErrorKind::Config, "unknown suite '" + name + "' (device, int, fp, kernels, all)");
  return rep;
}

}  // namespace fpirm::verify
