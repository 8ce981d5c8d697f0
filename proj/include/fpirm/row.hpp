#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

namespace fpirm {

inline constexpr int kRowBits = 512;
inline constexpr int kRowWords = kRowBits / 64;

/// A 512-bit memory row. Bit 0 is the least significant bit of word 0.
/// Lanes of width w occupy bits [k*w, (k+1)*w); lane 0 is the least
/// significant lane.
class RowValue {
 public:
  constexpr RowValue() = default;

  static RowValue zeros() { return RowValue{}; }
  static RowValue ones() {
    RowValue r;
    r.words_.fill(~0ULL);
    return r;
  }
  /// Every lane of the given width set to `value` (truncated to the lane).
  static RowValue broadcast(std::uint64_t value, int laneWidth);
  /// Lane values packed from `values`; missing lanes are zero.
  static RowValue fromLanes(const std::vector<std::uint64_t>& values, int laneWidth);

  bool bit(int i) const { return (words_[i >> 6] >> (i & 63)) & 1ULL; }
  void setBit(int i, bool v) {
    const std::uint64_t m = 1ULL << (i & 63);
    if (v) words_[i >> 6] |= m; else words_[i >> 6] &= ~m;
  }

  std::uint64_t lane(int index, int laneWidth) const;
  void setLane(int index, int laneWidth, std::uint64_t value);
  std::vector<std::uint64_t> lanes(int laneWidth) const;

  std::uint64_t word(int i) const { return words_[i]; }
  std::uint64_t& word(int i) { return words_[i]; }
  const std::array<std::uint64_t, kRowWords>& words() const { return words_; }

  bool isZero() const {
    std::uint64_t acc = 0;
    for (auto w : words_) acc |= w;
    return acc == 0;
  }
  int popcount() const {
    int n = 0;
    for (auto w : words_) n += std::popcount(w);
    return n;
  }

  RowValue operator~() const {
    RowValue r;
    for (int i = 0; i < kRowWords; ++i) r.words_[i] = ~words_[i];
    return r;
  }
  RowValue& operator&=(const RowValue& o) {
    for (int i = 0; i < kRowWords; ++i) words_[i] &= o.words_[i];
    return *this;
  }
  RowValue& operator|=(const RowValue& o) {
    for (int i = 0; i < kRowWords; ++i) words_[i] |= o.words_[i];
    return *this;
  }
  RowValue& operator^=(const RowValue& o) {
    for (int i = 0; i < kRowWords; ++i) words_[i] ^= o.words_[i];
    return *this;
  }
  friend RowValue operator&(RowValue a, const RowValue& b) { return a &= b; }
  friend RowValue operator|(RowValue a, const RowValue& b) { return a |= b; }
  friend RowValue operator^(RowValue a, const RowValue& b) { return a ^= b; }
  friend bool operator==(const RowValue&, const RowValue&) = default;

  /// Whole-row shift toward higher bit indices (lane-oblivious).
  RowValue shiftedLeft(int amount) const;
  /// Whole-row shift toward lower bit indices (lane-oblivious).
  RowValue shiftedRight(int amount) const;

  /// Hex string, most significant word first.
  std::string toHex() const;
  static RowValue fromHex(const std::string& hex);

 private:
  std::array<std::uint64_t, kRowWords> words_{};
};

/// True for the lane widths a row may be packed with.
constexpr bool isLegalLaneWidth(int w) { return w == 8 || w == 16 || w == 32 || w == 64; }

/// Mask selecting bits [lo, hi) inside every lane of width `laneWidth`.
RowValue laneFieldMask(int laneWidth, int lo, int hi);

}  // namespace fpirm
