#include "fpirm/ledger.hpp"

#include "fpirm/errors.hpp"

namespace fpirm {

const char* toString(EventKind kind) {
  switch (kind) {
    case EventKind::Shift: return "shift";
    case EventKind::Read: return "read";
    case EventKind::Write: return "write";
    case EventKind::TransverseRead: return "tr";
    case EventKind::LogicalShift: return "lshift";
    case EventKind::Logic: return "logic";
    case EventKind::Predicated: return "pred";
  }
  return "?";
}

EventKind eventKindFromString(const std::string& name) {
  for (auto k : {EventKind::Shift, EventKind::Read, EventKind::Write, EventKind::TransverseRead,
                 EventKind::LogicalShift, EventKind::Logic, EventKind::Predicated})
    if (name == toString(k)) return k;
  throw Error(ErrorKind::Program, "unknown trace event kind '" + name + "'");
}

CostLedger& CostLedger::operator+=(const CostLedger& o) {
  shifts += o.shifts;
  reads += o.reads;
  writes += o.writes;
  transverseReads += o.transverseReads;
  logicalShifts += o.logicalShifts;
  logicOps += o.logicOps;
  predicatedOps += o.predicatedOps;
  cycles += o.cycles;
  return *this;
}

CostLedger CostLedger::operator-(const CostLedger& o) const {
  CostLedger r;
  r.shifts = shifts - o.shifts;
  r.reads = reads - o.reads;
  r.writes = writes - o.writes;
  r.transverseReads = transverseReads - o.transverseReads;
  r.logicalShifts = logicalShifts - o.logicalShifts;
  r.logicOps = logicOps - o.logicOps;
  r.predicatedOps = predicatedOps - o.predicatedOps;
  r.cycles = cycles - o.cycles;
  return r;
}

CostLedger CostLedger::scaled(std::uint64_t f) const {
  CostLedger r;
  r.shifts = shifts * f;
  r.reads = reads * f;
  r.writes = writes * f;
  r.transverseReads = transverseReads * f;
  r.logicalShifts = logicalShifts * f;
  r.logicOps = logicOps * f;
  r.predicatedOps = predicatedOps * f;
  r.cycles = cycles * f;
  return r;
}

CostLedger CostLedger::fold(const std::vector<TraceEvent>& events) {
  CostLedger l;
  for (const auto& e : events) l.record(e);
  return l;
}

void to_json(nlohmann::json& j, const CostLedger& l) {
  j = nlohmann::json{{"shifts", l.shifts},
                     {"reads", l.reads},
                     {"writes", l.writes},
                     {"transverseReads", l.transverseReads},
                     {"logicalShifts", l.logicalShifts},
                     {"logicOps", l.logicOps},
                     {"predicatedOps", l.predicatedOps},
                     {"cycles", l.cycles}};
}

void from_json(const nlohmann::json& j, CostLedger& l) {
  l.shifts = j.value("shifts", 0ULL);
  l.reads = j.value("reads", 0ULL);
  l.writes = j.value("writes", 0ULL);
  l.transverseReads = j.value("transverseReads", 0ULL);
  l.logicalShifts = j.value("logicalShifts", 0ULL);
  l.logicOps = j.value("logicOps", 0ULL);
  l.predicatedOps = j.value("predicatedOps", 0ULL);
  l.cycles = j.value("cycles", 0ULL);
}

void to_json(nlohmann::json& j, const TraceEvent& e) {
  j = nlohmann::json{{"op", toString(e.kind)}, {"dbc", e.dbc}, {"amount", e.amount}, {"row", e.row}};
}

void from_json(const nlohmann::json& j, TraceEvent& e) {
  e.kind = eventKindFromString(j.at("op").get<std::string>());
  e.dbc = j.value("dbc", 0);
  e.amount = j.value("amount", 1);
  e.row = j.value("row", -1);
}

}  // namespace fpirm
