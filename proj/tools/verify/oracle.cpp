#include "oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace fpirm::oracle {

Column column(int ones) {
  // Sum, carry and super-carry by plain integer division of the count.
  return {ones % 2, (ones / 2) % 2, ones / 4};
}

Triple multiply(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t ea = (a >> 23) & 0xFF, eb = (b >> 23) & 0xFF;
  Triple t;
  t.sign = (a ^ b) & 0x80000000u;
  if (ea == 0 || eb == 0) return t;
  const std::uint64_t sa = (a & 0x7FFFFF) | 0x800000, sb = (b & 0x7FFFFF) | 0x800000;
  std::uint64_t p = sa * sb;
  const bool twoOrMore = p >> 47;
  if (!twoOrMore) p <<= 1;
  const std::int64_t e = static_cast<std::int64_t>(ea + eb) - 127 + (twoOrMore ? 1 : 0);
  const std::uint64_t e9 = static_cast<std::uint64_t>(e) & 0x1FF;
  t.flag = e9 >= 255;
  const std::uint64_t field = e9 & 0xFF;
  if (field == 0) return t;
  t.mantissa = p;
  t.exponent = field << 23;
  return t;
}

Triple decompose(std::uint32_t x) {
  Triple t;
  t.sign = x & 0x80000000u;
  t.exponent = x & 0x7F800000u;
  if (t.exponent != 0) t.mantissa = static_cast<std::uint64_t>((x & 0x7FFFFF) | 0x800000) << 24;
  return t;
}

std::uint64_t alignMantissa(std::uint64_t mantissa, std::uint64_t maxExponent, std::uint64_t exponent) {
  const std::uint64_t d = ((maxExponent >> 23) - (exponent >> 23)) & 0x1FF;
  return d >= 64 ? 0 : mantissa >> d;
}

Packed normalizeSum(std::uint64_t sum, std::uint64_t maxExponent) {
  const bool negative = sum >> 63;
  const std::uint64_t mag = negative ? (~sum + 1) : sum;
  const int lead = mag == 0 ? 47 : 63 - std::countl_zero(mag);
  const std::uint64_t e9 = static_cast<std::uint64_t>(static_cast<std::int64_t>(maxExponent >> 23) + lead - 47) & 0x1FF;
  Packed r;
  r.flag = e9 >= 255;
  if (mag == 0 || (e9 & 0xFF) == 0) return r;
  const std::uint64_t aligned = lead >= 23 ? mag >> (lead - 23) : mag << (23 - lead);
  r.bits = static_cast<std::uint32_t>((aligned & 0x7FFFFF) | ((e9 & 0xFF) << 23) |
                                      (negative ? 0x80000000u : 0));
  return r;
}

Packed add(const std::vector<Triple>& terms) {
  std::uint64_t maxE = 0;
  bool flag = false;
  for (const auto& t : terms) {
    maxE = std::max(maxE, t.exponent);
    flag |= t.flag;
  }
  std::uint64_t sum = 0;
  for (const auto& t : terms) {
    const std::uint64_t a = alignMantissa(t.mantissa, maxE, t.exponent);
    sum += t.sign ? (~a + 1) : a;
  }
  Packed r = normalizeSum(sum, maxE);
  r.flag |= flag;
  return r;
}

double value(const Triple& t) {
  if (t.mantissa == 0) return 0.0;
  const double v = std::ldexp(static_cast<double>(t.mantissa),
                              static_cast<int>(t.exponent >> 23) - 127 - 47);
  return t.sign ? -v : v;
}

float asFloat(std::uint32_t bits) { return std::bit_cast<float>(bits); }
std::uint32_t bitsOf(float f) { return std::bit_cast<std::uint32_t>(f); }

}  // namespace fpirm::oracle
