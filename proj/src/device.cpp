#include "fpirm/device.hpp"

#include <algorithm>
#include <fstream>

#include "fpirm/errors.hpp"

namespace fpirm {

int DeviceConfig::requiredOverhead() const {
  // AP0 must reach row D-1 and AP1 must reach row 0.
  const int home = ap0Home();
  return std::max(home + trd - 1, domains - 1 - home);
}

void DeviceConfig::validate() const {
  if (domains != 16 && domains != 32 && domains != 64)
    throw Error(ErrorKind::Config, "domains must be 16, 32 or 64 (got " + std::to_string(domains) + ")");
  if (trd < 2 || trd > 15) throw Error(ErrorKind::Config, "trd must be in 2..15");
  if (trd > domains) throw Error(ErrorKind::Config, "trd exceeds domains");
  if (overheadDomains >= 0 && overheadDomains < trd - 1)
    throw Error(ErrorKind::Config, "overheadDomains must be at least trd-1");
  if (dbcsPerSubarray < 1) throw Error(ErrorKind::Config, "dbcsPerSubarray must be >= 1");
  if (tileCols != kRowBits) throw Error(ErrorKind::Config, "tileCols must be 512");
  if (tileRows < 1) throw Error(ErrorKind::Config, "tileRows must be positive");
}

DeviceConfig DeviceConfig::fromJson(const nlohmann::json& j) {
  DeviceConfig c;
  if (!j.is_object()) throw Error(ErrorKind::Config, "device config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k != "domains" && k != "trd" && k != "overheadDomains" && k != "dbcsPerSubarray" &&
        k != "tileRows" && k != "tileCols" && k != "comment")
      throw Error(ErrorKind::Config, "unknown device config key '" + k + "'");
  }
  c.domains = j.value("domains", c.domains);
  c.trd = j.value("trd", c.trd);
  c.overheadDomains = j.value("overheadDomains", c.overheadDomains);
  c.dbcsPerSubarray = j.value("dbcsPerSubarray", c.dbcsPerSubarray);
  c.tileRows = j.value("tileRows", c.tileRows);
  c.tileCols = j.value("tileCols", c.tileCols);
  c.validate();
  return c;
}

DeviceConfig DeviceConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open device config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, path + ": " + e.what());
  }
  // A combined config file may nest the device block.
  if (j.contains("device")) return fromJson(j.at("device"));
  return fromJson(j);
}

nlohmann::json DeviceConfig::toJson() const {
  return {{"domains", domains},
          {"trd", trd},
          {"overheadDomains", resolvedOverhead()},
          {"dbcsPerSubarray", dbcsPerSubarray},
          {"tileRows", tileRows},
          {"tileCols", tileCols}};
}

TrPlanes popcountPlanes(const RowValue* rows, int count) {
  TrPlanes out;
  for (int w = 0; w < kRowWords; ++w) {
    std::uint64_t p0 = 0, p1 = 0, p2 = 0, p3 = 0;
    for (int r = 0; r < count; ++r) {
      std::uint64_t c = rows[r].word(w);
      std::uint64_t t = p0 & c; p0 ^= c; c = t;
      t = p1 & c; p1 ^= c; c = t;
      t = p2 & c; p2 ^= c; c = t;
      p3 ^= c;
    }
    out.planes[0].word(w) = p0;
    out.planes[1].word(w) = p1;
    out.planes[2].word(w) = p2;
    out.planes[3].word(w) = p3;
  }
  return out;
}

namespace {

const DeviceConfig& validated(const DeviceConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

Dbc::Dbc(const DeviceConfig& cfg, int id, Trace* trace)
    : id_((validated(cfg), id)),
      domains_(cfg.domains),
      trd_(cfg.trd),
      overhead_(cfg.resolvedOverhead()),
      home_(cfg.ap0Home()),
      rows_(cfg.domains),
      trace_(trace) {}

std::optional<int> Dbc::rowAt(Port ap) const {
  const int r = home_ + offset_ + (ap == Port::AP1 ? trd_ - 1 : 0);
  if (r < 0 || r >= domains_) return std::nullopt;
  return r;
}

int Dbc::shiftToAlign(int row, Port ap) const {
  const int target = row - (ap == Port::AP1 ? trd_ - 1 : 0) - home_;
  return target - offset_;
}

bool Dbc::canAlign(int row, Port ap) const {
  if (row < 0 || row >= domains_) return false;
  const int target = offset_ + shiftToAlign(row, ap);
  return target >= -overhead_ && target <= overhead_;
}

void Dbc::shift(ShiftDir dir, int count) {
  if (count < 0) throw Error(ErrorKind::OverheadExceeded, "negative shift count");
  if (count == 0) return;
  const int next = offset_ + (dir == ShiftDir::Up ? count : -count);
  if (next < -overhead_ || next > overhead_)
    throw Error(ErrorKind::OverheadExceeded,
                "DBC " + std::to_string(id_) + ": head offset " + std::to_string(next) +
                    " exceeds " + std::to_string(overhead_) + " overhead domains");
  offset_ = next;
  charge(EventKind::Shift, count);
}

void Dbc::align(int row, Port ap) {
  if (row < 0 || row >= domains_)
    throw Error(ErrorKind::Misaligned, "row " + std::to_string(row) + " outside DBC");
  const int s = shiftToAlign(row, ap);
  if (s > 0) shift(ShiftDir::Up, s);
  else if (s < 0) shift(ShiftDir::Down, -s);
}

int Dbc::checkedRowAt(Port ap) const {
  const auto r = rowAt(ap);
  if (!r)
    throw Error(ErrorKind::Misaligned, "DBC " + std::to_string(id_) + ": overhead domain at AP" +
                                           std::to_string(static_cast<int>(ap)));
  return *r;
}

RowValue Dbc::readRow(Port ap) {
  const int r = checkedRowAt(ap);
  charge(EventKind::Read, 1, r);
  return rows_[r];
}

void Dbc::writeRow(Port ap, const RowValue& value) {
  const int r = checkedRowAt(ap);
  charge(EventKind::Write, 1, r);
  rows_[r] = value;
}

int Dbc::windowBase() const {
  const auto a = rowAt(Port::AP0);
  const auto b = rowAt(Port::AP1);
  if (!a || !b)
    throw Error(ErrorKind::Misaligned,
                "DBC " + std::to_string(id_) + ": TR window straddles overhead domains");
  return *a;
}

TrPlanes Dbc::transverseReadPlanes() {
  const int base = windowBase();
  charge(EventKind::TransverseRead, 1, base);
  return popcountPlanes(&rows_[base], trd_);
}

OnesCounts Dbc::transverseRead() {
  const auto planes = transverseReadPlanes();
  OnesCounts out{};
  for (int i = 0; i < kRowBits; ++i) out[i] = static_cast<std::uint8_t>(planes.count(i));
  return out;
}

const RowValue& Dbc::peek(int row) const {
  if (row < 0 || row >= domains_) throw Error(ErrorKind::Misaligned, "peek outside DBC");
  return rows_[row];
}

void Dbc::poke(int row, const RowValue& value) {
  if (row < 0 || row >= domains_) throw Error(ErrorKind::Misaligned, "poke outside DBC");
  rows_[row] = value;
}

void Dbc::clear() {
  std::fill(rows_.begin(), rows_.end(), RowValue{});
  offset_ = 0;
}

}  // namespace fpirm
