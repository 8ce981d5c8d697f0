#pragma once

// Scalar reference arithmetic for one lane. Written directly against host
// integers; shares no code with the simulator.

#include <cstdint>
#include <vector>

namespace fpirm::oracle {

/// Decomposed single: mantissa with 1.0 at bit 47, exponent field in place
/// at bits 23..30, sign at bit 31, out-of-range flag.
struct Triple {
  std::uint64_t mantissa = 0;
  std::uint64_t exponent = 0;
  std::uint64_t sign = 0;
  bool flag = false;
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct Packed {
  std::uint32_t bits = 0;
  bool flag = false;
  friend bool operator==(const Packed&, const Packed&) = default;
};

/// Column outputs of the 7-input counter.
struct Column {
  int sum, carry, superCarry;
};
Column column(int ones);

Triple multiply(std::uint32_t a, std::uint32_t b);
Triple decompose(std::uint32_t x);
std::uint64_t alignMantissa(std::uint64_t mantissa, std::uint64_t maxExponent, std::uint64_t exponent);
Packed normalizeSum(std::uint64_t sum, std::uint64_t maxExponent);
Packed add(const std::vector<Triple>& terms);

/// Exact value of a triple as a double (mantissa is at most 48 bits wide).
double value(const Triple& t);
float asFloat(std::uint32_t bits);
std::uint32_t bitsOf(float f);

}  // namespace fpirm::oracle
