#include "fpirm/row.hpp"

#include "fpirm/errors.hpp"

#include <algorithm>
#include <cstdio>

namespace fpirm {

namespace {

std::uint64_t laneMaskBits(int laneWidth) {
  return laneWidth == 64 ? ~0ULL : ((1ULL << laneWidth) - 1);
}

void checkLaneWidth(int laneWidth) {
  if (!isLegalLaneWidth(laneWidth))
    throw Error(ErrorKind::LanePackingError, "lane width " + std::to_string(laneWidth));
}

}  // namespace

const char* toString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OverheadExceeded: return "OverheadExceeded";
    case ErrorKind::Misaligned: return "Misaligned";
    case ErrorKind::IllegalPredicateSource: return "IllegalPredicateSource";
    case ErrorKind::LanePackingError: return "LanePackingError";
    case ErrorKind::TooManyOperands: return "TooManyOperands";
    case ErrorKind::CapacityExceeded: return "CapacityExceeded";
    case ErrorKind::UnsupportedLayer: return "UnsupportedLayer";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Program: return "ProgramError";
    case ErrorKind::InvalidInput: return "InvalidInput";
  }
  return "Error";
}

RowValue RowValue::broadcast(std::uint64_t value, int laneWidth) {
  checkLaneWidth(laneWidth);
  std::uint64_t w = value & laneMaskBits(laneWidth);
  for (int span = laneWidth; span < 64; span *= 2) w |= w << span;
  RowValue r;
  r.words_.fill(w);
  return r;
}

RowValue RowValue::fromLanes(const std::vector<std::uint64_t>& values, int laneWidth) {
  checkLaneWidth(laneWidth);
  const int n = kRowBits / laneWidth;
  if (static_cast<int>(values.size()) > n)
    throw Error(ErrorKind::LanePackingError,
                std::to_string(values.size()) + " values exceed " + std::to_string(n) + " lanes");
  RowValue r;
  for (int k = 0; k < static_cast<int>(values.size()); ++k) r.setLane(k, laneWidth, values[k]);
  return r;
}

std::uint64_t RowValue::lane(int index, int laneWidth) const {
  const int bit = index * laneWidth;
  return (words_[bit >> 6] >> (bit & 63)) & laneMaskBits(laneWidth);
}

void RowValue::setLane(int index, int laneWidth, std::uint64_t value) {
  const int bit = index * laneWidth;
  const std::uint64_t m = laneMaskBits(laneWidth) << (bit & 63);
  auto& w = words_[bit >> 6];
  w = (w & ~m) | ((value << (bit & 63)) & m);
}

std::vector<std::uint64_t> RowValue::lanes(int laneWidth) const {
  checkLaneWidth(laneWidth);
  std::vector<std::uint64_t> out(kRowBits / laneWidth);
  for (int k = 0; k < static_cast<int>(out.size()); ++k) out[k] = lane(k, laneWidth);
  return out;
}

RowValue RowValue::shiftedLeft(int amount) const {
  RowValue r;
  if (amount >= kRowBits) return r;
  const int ws = amount >> 6;
  const int bs = amount & 63;
  for (int i = kRowWords - 1; i >= ws; --i) {
    std::uint64_t v = words_[i - ws] << bs;
    if (bs && i - ws - 1 >= 0) v |= words_[i - ws - 1] >> (64 - bs);
    r.words_[i] = v;
  }
  return r;
}

RowValue RowValue::shiftedRight(int amount) const {
  RowValue r;
  if (amount >= kRowBits) return r;
  const int ws = amount >> 6;
  const int bs = amount & 63;
  for (int i = 0; i + ws < kRowWords; ++i) {
    std::uint64_t v = words_[i + ws] >> bs;
    if (bs && i + ws + 1 < kRowWords) v |= words_[i + ws + 1] << (64 - bs);
    r.words_[i] = v;
  }
  return r;
}

std::string RowValue::toHex() const {
  std::string s;
  s.reserve(kRowWords * 16);
  char buf[17];
  for (int i = kRowWords - 1; i >= 0; --i) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(words_[i]));
    s += buf;
  }
  return s;
}

RowValue RowValue::fromHex(const std::string& hexIn) {
  std::string hex = hexIn;
  if (hex.rfind("0x", 0) == 0 || hex.rfind("0X", 0) == 0) hex = hex.substr(2);
  if (hex.size() > kRowBits / 4) throw Error(ErrorKind::Program, "hex row too long: " + hexIn);
  RowValue r;
  int nib = 0;
  for (auto it = hex.rbegin(); it != hex.rend(); ++it, ++nib) {
    const char c = *it;
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw Error(ErrorKind::Program, "bad hex digit in " + hexIn);
    r.words_[nib / 16] |= static_cast<std::uint64_t>(v) << (4 * (nib % 16));
  }
  return r;
}

RowValue laneFieldMask(int laneWidth, int lo, int hi) {
  checkLaneWidth(laneWidth);
  hi = std::min(hi, laneWidth);
  if (lo >= hi) return RowValue{};
  const std::uint64_t upto = hi == 64 ? ~0ULL : ((1ULL << hi) - 1);
  return RowValue::broadcast(upto & ~((1ULL << lo) - 1), laneWidth);
}

}  // namespace fpirm
