#include "fpirm/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "fpirm/errors.hpp"

namespace fpirm::kernels {

namespace {

RowValue bc(std::uint64_t v) { return RowValue::broadcast(v, fp::kLane); }

RowValue singleLane(int lane, int laneWidth) {
  RowValue r;
  r.setLane(lane, laneWidth, ~0ULL);
  return r;
}

/// Adds packed partial sums (with their flags) by decomposing them again.
void sumPacked(Machine& m, std::span<const int> packed, std::span<const int> flags, int dst,
               int flagDst) {
  Machine::Frame f(m);
  std::vector<fp::TripleRows> terms;
  for (std::size_t i = 0; i < packed.size(); ++i) {
    const auto t = fp::allocateTriple(m);
    fp::decompose(m, packed[i], t);
    m.load(flags[i]);
    m.store(t.flag);
    terms.push_back(t);
  }
  fp::fpAdd(m, terms, dst, flagDst);
}

void checkWindow(std::size_t weights, std::size_t inputs) {
  if (weights != inputs)
    throw Error(ErrorKind::Program, "window has " + std::to_string(weights) + " weights and " +
                                        std::to_string(inputs) + " inputs");
  if (weights == 0) throw Error(ErrorKind::TooManyOperands, "empty convolution window");
}

}  // namespace

void ConvSpec::validate() const {
  if (inChannels < 1 || outChannels < 1) throw Error(ErrorKind::Config, "channel counts must be positive");
  if (kernel < 1 || kernel > 11) throw Error(ErrorKind::Config, "kernel size must be 1..11");
  if (rows < kernel || cols < kernel) throw Error(ErrorKind::Config, "feature map smaller than kernel");
}

ConvSpec ConvSpec::fromJson(const nlohmann::json& j) {
  ConvSpec s;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k != "inChannels" && k != "outChannels" && k != "rows" && k != "cols" && k != "kernel" &&
        k != "name" && k != "relu")
      throw Error(ErrorKind::Config, "unknown conv spec key '" + k + "'");
  }
  s.inChannels = j.value("inChannels", s.inChannels);
  s.outChannels = j.value("outChannels", s.outChannels);
  s.rows = j.value("rows", s.rows);
  s.cols = j.value("cols", s.cols);
  s.kernel = j.value("kernel", s.kernel);
  s.validate();
  return s;
}

nlohmann::json ConvSpec::toJson() const {
  return {{"inChannels", inChannels}, {"outChannels", outChannels}, {"rows", rows},
          {"cols", cols},             {"kernel", kernel}};
}

Placement place(int channel, int r, int c, int rows, int cols, int laneWidth, int domains) {
  if (!isLegalLaneWidth(laneWidth)) throw Error(ErrorKind::LanePackingError, "lane width");
  if (r < 0 || r >= rows || c < 0 || c >= cols || channel < 0)
    throw Error(ErrorKind::Program, "tensor index out of bounds");
  const long idx = (static_cast<long>(channel) * rows + r) * cols + c;
  const int lanes = kRowBits / laneWidth;
  const long row = idx / lanes;
  return {static_cast<int>(row / domains), static_cast<int>(row % domains), static_cast<int>(idx % lanes)};
}

void convWindow(Machine& m, std::span<const int> weights, std::span<const int> inputs, int dst,
                int flagDst) {
  checkWindow(weights.size(), inputs.size());
  if (weights.size() > static_cast<std::size_t>(kMaxTermsPerAdd))
    throw Error(ErrorKind::TooManyOperands,
                std::to_string(weights.size()) + " products in one addition; chunk the window");
  Machine::Frame f(m);
  std::vector<fp::TripleRows> products;
  // Products stay decomposed until the single multi-operand addition.
  for (std::size_t i = 0; i < weights.size(); ++i) {
    products.push_back(fp::allocateTriple(m));
    fp::fpMultiply(m, weights[i], inputs[i], products.back());
  }
  fp::fpAdd(m, products, dst, flagDst);
}

void relu(Machine& m, int src, int dst, int laneWidth) {
  m.load(src);
  m.loadPredicate(31, laneWidth);
  m.predicatedResetRb();
  m.store(dst);
}

void maxPool(Machine& m, std::span<const int> rows, int dst) {
  // Non-negative singles order like their 31-bit magnitudes.
  fp::maxTournament(m, rows, dst, 31, 0, fp::kLane);
}

void rotate180(Machine& m, std::span<const int> src, std::span<const int> dst) {
  constexpr int kElem = 32;
  const int k = static_cast<int>(src.size());
  if (k < 1 || k > kRowBits / kElem || dst.size() != src.size())
    throw Error(ErrorKind::LanePackingError, "rotate180 needs 1..16 rows of 32-bit lanes");
  for (int i = 0; i < k; ++i) {
    Machine::Frame f(m);
    const int parts = m.allocate(k);
    for (int j = 0; j < k; ++j) {
      m.load(src[i]);
      m.rbLogic(LogicOp::And, singleLane(j, kElem));
      const int move = kElem * ((k - 1 - j) - j);
      m.rbShift(std::abs(move), move > 0 ? ShiftSide::Left : ShiftSide::Right, kRowBits);
      m.store(parts + j);
    }
    const int out = dst[k - 1 - i];
    for (int j = 0; j < k;) {
      std::vector<int> group;
      if (j > 0) group.push_back(out);
      while (group.size() < 7 && j < k) group.push_back(parts + j++);
      m.bulk(LogicOp::Or, group);
      m.store(out);
    }
  }
}

void weightUpdate(Machine& m, int w, int lr, int dw, int dst, int flagDst) {
  Machine::Frame f(m);
  const auto step = fp::allocateTriple(m);
  fp::fpMultiply(m, lr, dw, step);
  m.load(step.sign);
  m.rbLogic(LogicOp::Xor, bc(fp::kSignMask));  // subtract
  m.store(step.sign);
  const auto old = fp::allocateTriple(m);
  fp::decompose(m, w, old);
  const fp::TripleRows terms[] = {old, step};
  fp::fpAdd(m, terms, dst, flagDst);
}

fp::PackedValue convWindow(Machine& m, const std::vector<RowValue>& weights,
                           const std::vector<RowValue>& inputs) {
  checkWindow(weights.size(), inputs.size());
  Machine::Frame f(m);
  const int n = static_cast<int>(weights.size());
  const int chunks = (n + kMaxTermsPerAdd - 1) / kMaxTermsPerAdd;
  const int out = m.allocate(2);
  if (chunks == 1) {
    Machine::Frame g(m);
    const int in = m.allocate(2 * n);
    std::vector<int> w(n), x(n);
    for (int i = 0; i < n; ++i) {
      m.poke(w[i] = in + i, weights[i]);
      m.poke(x[i] = in + n + i, inputs[i]);
    }
    convWindow(m, w, x, out, out + 1);
    return {m.peek(out), m.peek(out + 1)};
  }
  // Partial sums stay in memory between chunks.
  int count = chunks;
  int partial = m.allocate(2 * count);
  for (int c = 0; c < chunks; ++c) {
    Machine::Frame g(m);
    const int lo = c * kMaxTermsPerAdd;
    const int len = std::min(kMaxTermsPerAdd, n - lo);
    const int in = m.allocate(2 * len);
    std::vector<int> w(len), x(len);
    for (int i = 0; i < len; ++i) {
      m.poke(w[i] = in + i, weights[lo + i]);
      m.poke(x[i] = in + len + i, inputs[lo + i]);
    }
    convWindow(m, w, x, partial + c, partial + count + c);
  }
  while (count > 1) {
    const int groups = (count + kMaxTermsPerAdd - 1) / kMaxTermsPerAdd;
    const int next = groups == 1 ? out : m.allocate(2 * groups);
    const int nextFlags = groups == 1 ? out + 1 : next + groups;
    for (int g = 0; g < groups; ++g) {
      const int lo = g * kMaxTermsPerAdd;
      const int len = std::min(kMaxTermsPerAdd, count - lo);
      std::vector<int> p(len), fl(len);
      for (int i = 0; i < len; ++i) {
        p[i] = partial + lo + i;
        fl[i] = partial + count + lo + i;
      }
      sumPacked(m, p, fl, next + g, nextFlags + g);
    }
    partial = next;
    count = groups;
  }
  return {m.peek(out), m.peek(out + 1)};
}

RowValue relu(Machine& m, const RowValue& row, int laneWidth) {
  Machine::Frame f(m);
  const int r = m.allocate(2);
  m.poke(r, row);
  relu(m, r, r + 1, laneWidth);
  return m.peek(r + 1);
}

void requireFinite(const RowValue& row, int lanes) {
  for (int k = 0; k < lanes; ++k)
    if (((row.lane(k, fp::kLane) >> 23) & 0xFF) == 0xFF)
      throw Error(ErrorKind::InvalidInput, "lane " + std::to_string(k) + " is not finite");
}

RowValue maxPool(Machine& m, const std::vector<RowValue>& rows, bool validate) {
  if (validate) {
    for (const auto& r : rows) {
      requireFinite(r);
      for (int k = 0; k < fp::kLanesPerRow; ++k)
        if (r.lane(k, fp::kLane) & ~0x7FFFFFFFULL)
          throw Error(ErrorKind::InvalidInput,
                      "maxPool lane " + std::to_string(k) + " is negative or not a packed single");
    }
  }
  Machine::Frame f(m);
  const int in = m.allocate(static_cast<int>(rows.size()) + 1);
  std::vector<int> idx;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    m.poke(in + static_cast<int>(j), rows[j]);
    idx.push_back(in + static_cast<int>(j));
  }
  const int dst = in + static_cast<int>(rows.size());
  maxPool(m, idx, dst);
  return m.peek(dst);
}

std::vector<RowValue> rotate180(Machine& m, const std::vector<RowValue>& rows) {
  Machine::Frame f(m);
  const int k = static_cast<int>(rows.size());
  const int base = m.allocate(2 * k);
  std::vector<int> src(k), dst(k);
  for (int i = 0; i < k; ++i) {
    m.poke(src[i] = base + i, rows[i]);
    dst[i] = base + k + i;
  }
  rotate180(m, src, dst);
  std::vector<RowValue> out;
  for (int i = 0; i < k; ++i) out.push_back(m.peek(dst[i]));
  return out;
}

fp::PackedValue weightUpdate(Machine& m, const RowValue& w, const RowValue& lr, const RowValue& dw) {
  Machine::Frame f(m);
  const int r = m.allocate(5);
  m.poke(r, w);
  m.poke(r + 1, lr);
  m.poke(r + 2, dw);
  weightUpdate(m, r, r + 1, r + 2, r + 3, r + 4);
  return {m.peek(r + 3), m.peek(r + 4)};
}

LayerResult conv2d(Machine& m, const ConvSpec& spec, const std::vector<float>& input,
                   const std::vector<float>& weights, bool applyRelu) {
  spec.validate();
  const int n = spec.inChannels, k = spec.kernel;
  const int ro = spec.outRows(), co = spec.outCols();
  if (input.size() != static_cast<std::size_t>(n) * spec.rows * spec.cols)
    throw Error(ErrorKind::Program, "input tensor size does not match the layer");
  if (weights.size() != static_cast<std::size_t>(spec.outChannels) * n * k * k)
    throw Error(ErrorKind::Program, "weight tensor size does not match the layer");

  const int total = spec.outChannels * ro * co;
  LayerResult res;
  res.output.resize(total);
  res.outOfRange.resize(total);
  const int terms = spec.windowTerms();
  for (int first = 0; first < total; first += fp::kLanesPerRow) {
    const int lanes = std::min(fp::kLanesPerRow, total - first);
    std::vector<RowValue> wRows(terms), xRows(terms);
    for (int e = 0; e < lanes; ++e) {
      const int o = first + e;
      const int mo = o / (ro * co), r = (o / co) % ro, c = o % co;
      int t = 0;
      for (int ch = 0; ch < n; ++ch)
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j, ++t) {
            const float wv = weights[((static_cast<std::size_t>(mo) * n + ch) * k + i) * k + j];
            const float xv = input[(static_cast<std::size_t>(ch) * spec.rows + r + i) * spec.cols + c + j];
            wRows[t].setLane(e, fp::kLane, std::bit_cast<std::uint32_t>(wv));
            xRows[t].setLane(e, fp::kLane, std::bit_cast<std::uint32_t>(xv));
          }
    }
    for (int t = 0; t < terms; ++t) {
      requireFinite(wRows[t], lanes);
      requireFinite(xRows[t], lanes);
    }
    auto sum = convWindow(m, wRows, xRows);
    if (applyRelu) sum.packed = relu(m, sum.packed);
    for (int e = 0; e < lanes; ++e) {
      res.output[first + e] = std::bit_cast<float>(static_cast<std::uint32_t>(sum.packed.lane(e, fp::kLane)));
      res.outOfRange[first + e] = sum.flag.lane(e, fp::kLane) != 0;
    }
  }
  return res;
}

std::vector<float> readTensorFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot open tensor file " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4) throw Error(ErrorKind::Config, path + ": size is not a multiple of 4 bytes");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 3; b >= 0; --b) u = (u << 8) | static_cast<unsigned char>(bytes[4 * i + b]);
    out[i] = std::bit_cast<float>(u);
  }
  return out;
}

void writeTensorFile(const std::string& path, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Config, "cannot write tensor file " + path);
  for (float v : values) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    const char b[4] = {static_cast<char>(u & 0xFF), static_cast<char>((u >> 8) & 0xFF),
                       static_cast<char>((u >> 16) & 0xFF), static_cast<char>(u >> 24)};
    out.write(b, 4);
  }
}

}  // namespace fpirm::kernels
