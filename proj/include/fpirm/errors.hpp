#pragma once

#include <stdexcept>
#include <string>

namespace fpirm {

enum class ErrorKind {
  OverheadExceeded,
  Misaligned,
  IllegalPredicateSource,
  LanePackingError,
  TooManyOperands,
  CapacityExceeded,
  UnsupportedLayer,
  Config,
  Program,
  InvalidInput,  // operand outside a kernel's domain (non-finite, negative for maxPool)
};

const char* toString(ErrorKind kind);

/// Every simulator failure is reported as an Error carrying its kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(toString(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fpirm
