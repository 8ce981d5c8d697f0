#pragma once

// Helpers shared by the unit tests.

#include <doctest.h>

#include <random>

#include "fpirm/errors.hpp"
#include "fpirm/row.hpp"

namespace doctest {
template <>
struct StringMaker<fpirm::RowValue> {
  static String convert(const fpirm::RowValue& r) { return r.toHex().c_str(); }
};
}  // namespace doctest

namespace fpirm::test {

inline RowValue randomRow(std::mt19937_64& g) {
  RowValue v;
  for (int k = 0; k < kRowWords; ++k) v.word(k) = g();
  return v;
}

/// Error kind as seen by assertions. fpirm::toString(ErrorKind) would
/// otherwise win overload resolution inside doctest's stringifier.
struct Raised {
  bool any = false;
  ErrorKind kind = ErrorKind::Config;
  friend bool operator==(const Raised& r, ErrorKind k) { return r.any && r.kind == k; }
};
inline doctest::String toString(const Raised& r) { return r.any ? fpirm::toString(r.kind) : "nothing"; }

/// Kind of the Error raised by `f`, or nothing.
template <class F>
Raised errorOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return {true, e.kind()};
  }
  return {};
}

}  // namespace fpirm::test
