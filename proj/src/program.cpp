#include "fpirm/program.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "fpirm/errors.hpp"
#include "fpirm/fp_unit.hpp"
#include "fpirm/int_alu.hpp"

namespace fpirm {

namespace {

// Argument kinds: r row, w lane width, n integer, v value, s name.
// A trailing '+' repeats the previous kind one or more times.
const std::map<std::string, std::string>& signatures() {
  static const std::map<std::string, std::string> sig = {
      {"poke", "rwv+"},      {"fill", "rwv"},         {"write", "rwv+"},   {"peek", "rw"},
      {"read", "rw"},        {"load", "r"},           {"store", "r"},      {"storep", "r"},
      {"writeimm", "rwv+"},  {"imm", "wv+"},          {"and", "wv+"},      {"or", "wv+"},
      {"xor", "wv+"},        {"not", ""},             {"shl", "nw"},       {"shr", "nw"},
      {"pred", "nw"},        {"predornot", "nw"},     {"predreset", ""},   {"tr", "rn"},
      {"latch", "s"},        {"bulk", "sr+"},         {"csa", "wrrrr+"},   {"add5", "rnnwr+"},
      {"sum", "rnnwr+"},     {"mul", "rrrnw"},        {"fpmul", "rrrrrr"}, {"decompose", "rrrrr"},
      {"fpadd", "rrr+"},     {"findmax", "rnnr+"},
  };
  return sig;
}

[[noreturn]] void fail(const Instruction& in, const std::string& what) {
  throw Error(ErrorKind::Program, "line " + std::to_string(in.line) + " (" + in.op + "): " + what);
}

std::uint64_t parseValue(const Instruction& in, const std::string& tok) {
  try {
    if (!tok.empty() && tok[0] == 'f') {
      std::size_t used = 0;
      const float f = std::stof(tok.substr(1), &used);
      if (used + 1 != tok.size()) fail(in, "bad float '" + tok + "'");
      return std::bit_cast<std::uint32_t>(f);
    }
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(tok, &used, 0);
    if (used != tok.size()) fail(in, "bad value '" + tok + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(in, "bad value '" + tok + "'");
  }
}

long parseInt(const Instruction& in, const std::string& tok) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used, 0);
    if (used != tok.size()) fail(in, "bad integer '" + tok + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(in, "bad integer '" + tok + "'");
  }
}

/// Kind of every argument position, or an error on arity mismatch.
std::string expandSignature(const Instruction& in, const std::string& sig) {
  std::string kinds;
  for (std::size_t i = 0; i < sig.size(); ++i) {
    if (sig[i] == '+') continue;
    const bool repeated = i + 1 < sig.size() && sig[i + 1] == '+';
    if (repeated) {
      if (in.args.size() <= kinds.size()) fail(in, "too few arguments");
      kinds.append(in.args.size() - kinds.size(), sig[i]);
    } else {
      kinds.push_back(sig[i]);
    }
  }
  if (kinds.size() != in.args.size())
    fail(in, "expected " + std::to_string(kinds.size()) + " arguments, got " + std::to_string(in.args.size()));
  return kinds;
}

Signal signalFrom(const Instruction& in, const std::string& s) {
  if (s == "and") return Signal::And;
  if (s == "or") return Signal::Or;
  if (s == "xor") return Signal::Xor;
  if (s == "carry") return Signal::Carry;
  if (s == "supercarry") return Signal::SuperCarry;
  fail(in, "unknown signal '" + s + "'");
}

LogicOp logicFrom(const Instruction& in, const std::string& s) {
  if (s == "and") return LogicOp::And;
  if (s == "or") return LogicOp::Or;
  if (s == "xor") return LogicOp::Xor;
  fail(in, "unknown logic op '" + s + "'");
}

/// Typed view of one instruction's arguments.
struct Args {
  const Instruction& in;
  int row(std::size_t i) const { return static_cast<int>(parseInt(in, in.args[i])); }
  int num(std::size_t i) const { return static_cast<int>(parseInt(in, in.args[i])); }
  int width(std::size_t i) const {
    const int w = num(i);
    if (!isLegalLaneWidth(w)) fail(in, "lane width " + in.args[i] + " is not a power of two in 8..512");
    return w;
  }
  std::vector<int> rows(std::size_t from) const {
    std::vector<int> r;
    for (std::size_t i = from; i < in.args.size(); ++i) r.push_back(row(i));
    return r;
  }
  int valueWidth(std::size_t i) const {
    const int w = width(i);
    if (w > 64) fail(in, "lane values are at most 64 bits wide");
    return w;
  }
  RowValue lanes(std::size_t widthAt) const {
    const int w = valueWidth(widthAt);
    std::vector<std::uint64_t> v;
    for (std::size_t i = widthAt + 1; i < in.args.size(); ++i) v.push_back(parseValue(in, in.args[i]));
    if (static_cast<int>(v.size()) > kRowBits / w) fail(in, "more values than lanes");
    return RowValue::fromLanes(v, w);
  }
  fp::TripleRows triple(std::size_t i) const {
    const int b = row(i);
    return {b, b + 1, b + 2, b + 3};
  }
};

}  // namespace

Program Program::parse(const std::string& text) {
  Program p;
  std::istringstream is(text);
  std::string raw;
  int lineNo = 0;
  while (std::getline(is, raw)) {
    ++lineNo;
    std::string body = raw.substr(0, raw.find('#'));
    std::istringstream ls(body);
    Instruction in;
    in.line = lineNo;
    if (!(ls >> in.op)) continue;
    in.text = body.substr(body.find_first_not_of(" \t"));
    while (in.text.size() && (in.text.back() == ' ' || in.text.back() == '\t' || in.text.back() == '\r'))
      in.text.pop_back();
    for (std::string a; ls >> a;) in.args.push_back(a);
    auto it = signatures().find(in.op);
    if (it == signatures().end()) fail(in, "unknown opcode");
    const std::string kinds = expandSignature(in, it->second);
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      switch (kinds[i]) {
        case 'r': {
          const long r = parseInt(in, in.args[i]);
          if (r < 0) fail(in, "negative row");
          p.highestRow_ = std::max(p.highestRow_, static_cast<int>(r));
          break;
        }
        case 'w': Args{in}.width(i); break;
        case 'n': parseInt(in, in.args[i]); break;
        case 'v': parseValue(in, in.args[i]); break;
        default: break;
      }
    }
    // Triples occupy four consecutive rows from their base.
    if (in.op == "fpmul") p.highestRow_ = std::max(p.highestRow_, static_cast<int>(parseInt(in, in.args[5])));
    if (in.op == "fpadd")
      for (std::size_t i = 2; i < in.args.size(); ++i)
        p.highestRow_ = std::max(p.highestRow_, static_cast<int>(parseInt(in, in.args[i])) + 3);
    p.code_.push_back(std::move(in));
  }
  return p;
}

Program Program::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::Config, "cannot open program " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

Program::Result Program::execute(Machine& m) const {
  Result r;
  if (highestRow_ >= m.totalRows())
    throw Error(ErrorKind::CapacityExceeded, "program names row " + std::to_string(highestRow_));
  const int reserve = highestRow_ + 1 - m.allocationMark();
  if (reserve > 0) m.allocate(reserve);
  for (const auto& in : code_) {
    const std::size_t before = m.trace().events().size();
    const Args a{in};
    const std::string& op = in.op;
    if (op == "poke") m.poke(a.row(0), a.lanes(1));
    else if (op == "fill") m.poke(a.row(0), RowValue::broadcast(parseValue(in, in.args[2]), a.valueWidth(1)));
    else if (op == "write") m.hostWrite(a.row(0), a.lanes(1));
    else if (op == "peek" || op == "read") {
      const RowValue v = op == "peek" ? m.peek(a.row(0)) : m.hostRead(a.row(0));
      r.peeks.push_back({in.line, a.row(0), a.valueWidth(1), v.lanes(a.valueWidth(1))});
    } else if (op == "load") m.load(a.row(0));
    else if (op == "store") m.store(a.row(0));
    else if (op == "storep") m.storePredicated(a.row(0));
    else if (op == "writeimm") m.writeImmediate(a.row(0), a.lanes(1));
    else if (op == "imm") m.rbImmediate(a.lanes(0));
    else if (op == "and" || op == "or" || op == "xor") m.rbLogic(logicFrom(in, op), a.lanes(0));
    else if (op == "not") m.rbInvert();
    else if (op == "shl" || op == "shr")
      m.rbShift(a.num(0), op == "shl" ? ShiftSide::Left : ShiftSide::Right, a.width(1));
    else if (op == "pred") m.loadPredicate(a.num(0), a.width(1));
    else if (op == "predornot") m.loadPredicateOrAndNotRb(a.num(0), a.width(1));
    else if (op == "predreset") m.predicatedResetRb();
    else if (op == "tr") m.transverseRead(a.row(0), a.num(1));
    else if (op == "latch") m.rbFromLatch(signalFrom(in, in.args[0]));
    else if (op == "bulk") {
      const auto rows = a.rows(1);
      m.bulk(logicFrom(in, in.args[0]), rows);
    } else if (op == "csa") {
      const auto rows = a.rows(4);
      alu::csaReduce(m, rows, a.width(0), {a.row(1), a.row(2), a.row(3)});
    } else if (op == "add5") {
      const auto rows = a.rows(4);
      alu::add5(m, rows, a.row(0), a.num(1), a.num(2), a.width(3));
    } else if (op == "sum") {
      alu::sumRows(m, a.rows(4), a.row(0), a.num(1), a.num(2), a.width(3));
    } else if (op == "mul") alu::multiply(m, a.row(0), a.row(1), a.row(2), a.num(3), a.width(4));
    else if (op == "fpmul")
      fp::fpMultiply(m, a.row(0), a.row(1), {a.row(2), a.row(3), a.row(4), a.row(5)});
    else if (op == "decompose") fp::decompose(m, a.row(0), {a.row(1), a.row(2), a.row(3), a.row(4)});
    else if (op == "fpadd") {
      std::vector<fp::TripleRows> t;
      for (std::size_t i = 2; i < in.args.size(); ++i) t.push_back(a.triple(i));
      fp::fpAdd(m, t, a.row(0), a.row(1));
    } else if (op == "findmax") {
      const auto rows = a.rows(3);
      fp::findMax(m, rows, a.row(0), a.num(1), a.num(2), fp::kLane);
    }
    r.spans.emplace_back(before, m.trace().events().size() - before);
  }
  return r;
}

nlohmann::json Program::traceJson(Machine& m, const Result& r) const {
  nlohmann::json j;
  auto& ins = j["instructions"] = nlohmann::json::array();
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const auto& span = i < r.spans.size() ? r.spans[i] : std::pair<std::size_t, std::size_t>{0, 0};
    ins.push_back({{"line", code_[i].line},
                   {"text", code_[i].text},
                   {"firstEvent", span.first},
                   {"eventCount", span.second}});
  }
  j["events"] = m.trace().events();
  j["ledger"] = m.ledger();
  auto& pk = j["peeks"] = nlohmann::json::array();
  for (const auto& p : r.peeks)
    pk.push_back({{"line", p.line}, {"row", p.row}, {"laneWidth", p.laneWidth}, {"lanes", p.lanes}});
  return j;
}

bool Program::isDemo(const std::string& name) {
  const std::string base = name.substr(0, name.find(':'));
  return base == "add5" || base == "multiply" || base == "fpmul";
}

std::string Program::demo(const std::string& name, std::uint64_t seed) {
  const auto colon = name.find(':');
  const std::string base = name.substr(0, colon);
  int width = 8;
  if (colon != std::string::npos) {
    try {
      width = std::stoi(name.substr(colon + 1));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Config, "bad demo width in '" + name + "'");
    }
  }
  if (!isDemo(name)) throw Error(ErrorKind::Config, "unknown demo '" + name + "'");
  std::mt19937_64 g(seed);
  std::ostringstream os;
  auto values = [&](int count, std::uint64_t mask) {
    for (int i = 0; i < count; ++i) os << ' ' << (g() & mask);
  };
  if (base == "add5") {
    if (width < 2 || width > 64) throw Error(ErrorKind::Config, "add5 demo width must be 2..64");
    const int lane = width <= 8 ? 8 : width <= 16 ? 16 : width <= 32 ? 32 : 64;
    const std::uint64_t mask = width == 64 ? ~0ULL : (1ULL << width) - 1;
    os << "# five " << width << "-bit operands per " << lane << "-bit lane\n";
    for (int r = 0; r < 5; ++r) {
      os << "poke " << 10 + r << ' ' << lane;
      values(kRowBits / lane, mask);
      os << '\n';
    }
    os << "add5 15 " << width << " 0 " << lane << " 10 11 12 13 14\n";
    os << "peek 15 " << lane << '\n';
  } else if (base == "multiply") {
    if (width < 1 || width > 32) throw Error(ErrorKind::Config, "multiply demo width must be 1..32");
    int lane = 8;
    while (lane < 2 * width) lane *= 2;
    const std::uint64_t mask = (1ULL << width) - 1;
    os << "# " << width << "-bit unsigned products in " << lane << "-bit lanes\n";
    for (int r = 0; r < 2; ++r) {
      os << "poke " << 10 + r << ' ' << lane;
      values(kRowBits / lane, mask);
      os << '\n';
    }
    os << "mul 10 11 12 " << width << ' ' << lane << '\n';
    os << "peek 12 " << lane << '\n';
  } else {
    os << "# single-precision products, 8 per row\n";
    std::uniform_real_distribution<float> mag(0.5f, 4.0f);
    for (int r = 0; r < 2; ++r) {
      os << "poke " << 10 + r << " 64";
      for (int i = 0; i < fp::kLanesPerRow; ++i) {
        const float f = (g() & 1 ? -1.0f : 1.0f) * mag(g);
        os << ' ' << std::bit_cast<std::uint32_t>(f);
      }
      os << '\n';
    }
    os << "fpmul 10 11 12 13 14 15\n";
    for (int r = 12; r < 16; ++r) os << "peek " << r << " 64\n";
  }
  return os.str();
}

}  // namespace fpirm
