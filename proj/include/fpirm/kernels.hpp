#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpirm/fp_unit.hpp"

namespace fpirm::kernels {

/// Largest number of products summed by a single fpAdd. Longer windows are
/// summed in chunks of this size and the packed partial sums are added.
inline constexpr int kMaxTermsPerAdd = 49;

/// Convolution layer geometry; valid padding, stride 1.
struct ConvSpec {
  int inChannels = 1;   // N
  int outChannels = 1;  // M
  int rows = 1;         // R_in
  int cols = 1;         // C_in
  int kernel = 3;       // k

  int outRows() const { return rows - kernel + 1; }
  int outCols() const { return cols - kernel + 1; }
  int windowTerms() const { return kernel * kernel * inChannels; }
  void validate() const;

  static ConvSpec fromJson(const nlohmann::json& j);
  nlohmann::json toJson() const;
};

/// Where one tensor element lives when a tensor is lane-packed row-major.
struct Placement {
  int dbc;
  int row;   // row inside the DBC
  int lane;
};

Placement place(int channel, int r, int c, int rows, int cols, int laneWidth, int domains);

// Row-level microcode.

/// Products of corresponding lanes summed with one fpAdd. At most
/// kMaxTermsPerAdd terms.
void convWindow(Machine& m, std::span<const int> weights, std::span<const int> inputs, int dst,
                int flagDst);

/// Lanes whose sign bit (31) is set become +0.
void relu(Machine& m, int src, int dst, int laneWidth = fp::kLane);

/// Largest of the rows, lane by lane, over the low 31 bits. Inputs must
/// be non-negative singles.
void maxPool(Machine& m, std::span<const int> rows, int dst);

/// 180-degree rotation of a k x k matrix held one matrix row per memory row
/// in 32-bit lanes (element j of row i in lane j of `src[i]`).
void rotate180(Machine& m, std::span<const int> src, std::span<const int> dst);

/// dst = W - lr * dW per lane, with `lr` a row of learning rates.
void weightUpdate(Machine& m, int w, int lr, int dw, int dst, int flagDst);

// Value-level wrappers.

/// Any window length; chunked per kMaxTermsPerAdd.
fp::PackedValue convWindow(Machine& m, const std::vector<RowValue>& weights,
                           const std::vector<RowValue>& inputs);
RowValue relu(Machine& m, const RowValue& row, int laneWidth = fp::kLane);
/// With `validate`, negative or non-finite lanes raise InvalidInput.
RowValue maxPool(Machine& m, const std::vector<RowValue>& rows, bool validate = true);
std::vector<RowValue> rotate180(Machine& m, const std::vector<RowValue>& rows);
fp::PackedValue weightUpdate(Machine& m, const RowValue& w, const RowValue& lr, const RowValue& dw);

/// Raises InvalidInput if any of the first `lanes` lanes holds an infinity
/// or NaN encoding.
void requireFinite(const RowValue& row, int lanes = fp::kLanesPerRow);

/// Result of a simulated convolution layer.
struct LayerResult {
  std::vector<float> output;      // [M][R_out][C_out]
  std::vector<bool> outOfRange;   // flag per output element
};

/// Forward convolution of `input` ([N][R][C]) with `weights` ([M][N][k][k]),
/// eight output elements per row in SIMD, optional ReLU.
LayerResult conv2d(Machine& m, const ConvSpec& spec, const std::vector<float>& input,
                   const std::vector<float>& weights, bool applyRelu);

/// Little-endian float32 tensor file.
std::vector<float> readTensorFile(const std::string& path);
void writeTensorFile(const std::string& path, const std::vector<float>& values);

}  // namespace fpirm::kernels
