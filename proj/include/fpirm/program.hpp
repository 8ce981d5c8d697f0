#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpirm/machine.hpp"

namespace fpirm {

/// One line of a microprogram: an opcode and its arguments.
struct Instruction {
  int line = 0;
  std::string text;
  std::string op;
  std::vector<std::string> args;
};

/// Value of a row read back with `peek`.
struct PeekResult {
  int line = 0;
  int row = 0;
  int laneWidth = 64;
  std::vector<std::uint64_t> lanes;
};

/// Textual microprogram, one primitive per line. See docs/microprogram.md.
class Program {
 public:
  /// Throws Error(Program) naming the line on any syntax error.
  static Program parse(const std::string& text);
  static Program load(const std::string& path);

  /// Built-in demos: "add5", "multiply" (optionally ":<width>") and "fpmul".
  /// Operand data is drawn from `seed`.
  static std::string demo(const std::string& name, std::uint64_t seed);
  static bool isDemo(const std::string& name);

  const std::vector<Instruction>& instructions() const { return code_; }
  /// Largest row number named by the program, or -1.
  int highestRow() const { return highestRow_; }

  struct Result {
    std::vector<PeekResult> peeks;
    /// Per instruction: index of its first trace event and the event count.
    std::vector<std::pair<std::size_t, std::size_t>> spans;
  };

  /// Runs on `m`, reserving rows up to highestRow() so macro scratch
  /// allocations land above them. Device errors propagate.
  Result execute(Machine& m) const;

  /// {"instructions": [...], "events": [...], "ledger": {...}, "peeks": [...]}
  nlohmann::json traceJson(Machine& m, const Result& r) const;

 private:
  std::vector<Instruction> code_;
  int highestRow_ = -1;
};

}  // namespace fpirm
