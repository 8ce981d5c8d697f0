#pragma once

// Oracle-equivalence suites. Every check draws its data from a generator
// seeded by (seed, check name, trial index), so results do not depend on
// how trials are spread over workers.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpirm/device.hpp"

namespace fpirm::verify {

struct Options {
  std::uint64_t seed = 0;
  /// Trials per randomized check; a trial is one row of SIMD lanes.
  long trials = 64;
  /// Harness self-check: corrupt one simulator result per check.
  bool mutate = false;
  int workers = 1;
  DeviceConfig device;
};

struct CheckResult {
  std::string name;
  std::uint64_t cases = 0;     // lanes compared
  std::uint64_t failures = 0;  // lanes that differed
  /// First failing case (lowest trial index, then lane), with enough data
  /// to rerun it by hand.
  nlohmann::json reproducer;
  double seconds = 0;  // not serialized, so reports stay reproducible
  bool passed() const { return failures == 0 && cases > 0; }
  nlohmann::json toJson() const;
};

struct SuiteReport {
  std::string suite;
  Options options;
  std::vector<CheckResult> checks;
  bool passed() const;
  nlohmann::json toJson() const;
};

/// device, int, fp, kernels.
std::vector<std::string> suiteNames();
/// `name` is one of suiteNames() or "all". Throws Error(Config) otherwise.
SuiteReport runSuite(const std::string& name, const Options& o);

// Outcome of one trial.
struct Trial {
  std::uint64_t cases = 0;
  std::uint64_t failures = 0;
  std::optional<nlohmann::json> first;

  /// Records one compared case; `describe` builds the reproducer lazily.
  void expect(bool ok, const std::function<nlohmann::json()>& describe);
};

using TrialFn = std::function<void(long trial, std::mt19937_64& rng, Trial& out)>;

/// Runs `trials` trials of `fn`, sharded over o.workers threads.
CheckResult runTrials(const Options& o, const std::string& name, long trials, const TrialFn& fn);

/// True for the one case per check that --mutate corrupts.
inline bool mutated(const Options& o, long trial, int lane) { return o.mutate && trial == 0 && lane == 0; }

std::string hex(std::uint64_t v);

// Individual checks, sized explicitly.

CheckResult deviceShiftReadback(const Options& o, long trials);
CheckResult deviceOverheadBound(const Options& o);
CheckResult deviceTransverseRead(const Options& o, long trials);
CheckResult deviceBulkLogic(const Options& o, long trials);
CheckResult devicePredicatedStore(const Options& o, long trials);
CheckResult deviceLaneShift(const Options& o, long trials);

CheckResult intMultiplyExhaustive8(const Options& o);
CheckResult intMultiply(const Options& o, int width, long pairs);
CheckResult intAdd5(const Options& o, int width, long cases);
CheckResult intAdd5Field(const Options& o, long trials);
CheckResult intCsaReduce(const Options& o, int width, long cases);
CheckResult intCsaColumns(const Options& o);
CheckResult intSumRows(const Options& o, long trials);

CheckResult fpMultiply(const Options& o, long pairs);
CheckResult fpMultiplyEdges(const Options& o, long trials);
CheckResult fpDecompose(const Options& o, long trials);
CheckResult fpNormSum(const Options& o, long trials);

/// Relative error of fpAdd against an IEEE round-to-nearest sequential sum.
struct AddErrorStats {
  std::uint64_t nonCancelling = 0;  // |sum| >= 0.5 * sum of |terms|
  std::uint64_t withinBound = 0;    // of those, relative error <= n * 2^-23
  double worst = 0;                 // largest relative error seen there
};
CheckResult fpAdd(const Options& o, int n, long cases, AddErrorStats* stats = nullptr);
CheckResult fpFindMax(const Options& o, long trials);
/// Every ordering of 7 distinct random exponents per base set.
CheckResult fpFindMaxOrderings(const Options& o, long baseSets);

CheckResult kernelRelu(const Options& o, long trials);
CheckResult kernelMaxPool(const Options& o, long trials);
CheckResult kernelRotate180(const Options& o, int k, long trials);
CheckResult kernelConvWindow(const Options& o, long trials);
CheckResult kernelWeightUpdate(const Options& o, long trials);

}  // namespace fpirm::verify
