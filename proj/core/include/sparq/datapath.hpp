#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sparq/bitquant.hpp"
#include "sparq/settings.hpp"
#include "sparq/tensor.hpp"
#include "sparq/vsparq.hpp"

namespace sparq {

// ---------------------------------------------------------------------------
// Flexible multiplier: one 8b-8b product or two independent nb-8b products,
// each followed by a dynamic shift-left, summed by a single adder.
// ---------------------------------------------------------------------------

/// Which product terms reach the adder.
enum class WeightSelect : std::uint8_t { FirstOnly, SecondOnly, Both };

struct DualMultInput {
  std::uint16_t x1 = 0;
  std::uint16_t x2 = 0;
  std::int8_t w1 = 0;
  std::int8_t w2 = 0;
  int opt1 = 0;
  int opt2 = 0;
  WeightSelect mux = WeightSelect::Both;
};

/// A multiplier whose shifters support a fixed set of shift amounts.
class DualMultiplier {
 public:
  /// Throws std::invalid_argument if mantissa_bits is outside [2, 4] or a
  /// shift is outside [0, 8 - mantissa_bits].
  DualMultiplier(int mantissa_bits, std::vector<int> shifts);

  /// Shifter able to serve every encoding a config produces: its own
  /// placements plus the split halves of full-budget pair members.
  static DualMultiplier for_config(const TrimConfig& cfg);

  /// 4-bit mantissas with shifts {4, 0}: the plain 8b-8b split.
  static DualMultiplier int8();

  int mantissa_bits() const noexcept { return bits_; }
  std::span<const int> shifts() const noexcept { return shifts_; }

  /// 2^opt1*x1*w1 + 2^opt2*x2*w2, masked by `mux`. The unused term's inputs
  /// are not checked in single-term modes. Throws std::invalid_argument for
  /// an unsupported shift or an over-wide mantissa.
  std::int32_t operator()(const DualMultInput& in) const;

 private:
  int bits_;
  std::vector<int> shifts_;
};

/// Evaluates `in` on a 4-bit multiplier supporting shifts 0..4.
std::int32_t dual_multiply(const DualMultInput& in);

/// Evaluates `in` on the multiplier for `cfg`.
std::int32_t dual_multiply(const DualMultInput& in, const TrimConfig& cfg);

/// Recombination split of an 8-bit activation: high nibble at shift 4, low
/// nibble at shift 0, both against the same weight.
DualMultInput split_int8(std::uint8_t x, std::int8_t w) noexcept;

// ---------------------------------------------------------------------------
// Processing-element plumbing shared by the engines.
// ---------------------------------------------------------------------------

/// 32-bit partial-sum register. add() throws std::overflow_error rather
/// than wrapping.
struct Accumulator {
  std::int32_t value = 0;

  void add(std::int64_t term);
  friend bool operator==(const Accumulator&, const Accumulator&) = default;
};

/// An activation pair as it streams into a PE: the raw values plus the
/// encoding produced at the array edge (unused on the exact path).
struct ActivationPair {
  std::uint8_t even = 0;
  std::uint8_t odd = 0;
  PairEncoding encoding;
};

/// Encodes activation pairs and multiplies them against weight pairs through
/// DualMultiplier instances, for one SparqSettings.
class PairDatapath {
 public:
  explicit PairDatapath(SparqSettings settings);

  const SparqSettings& settings() const noexcept { return settings_; }

  ActivationPair encode(std::uint8_t even, std::uint8_t odd) const;

  /// The pair's contribution to a dot product, computed with one dual
  /// multiplier pass (two passes on the exact path).
  std::int32_t multiply(const ActivationPair& a, std::int8_t w_even,
                        std::int8_t w_odd) const;

 private:
  SparqSettings settings_;
  DualMultiplier mult_;
};

// ---------------------------------------------------------------------------
// Engines. Activations are [M x K] unsigned, weights [K x N] signed; every
// engine returns [M x N] int32 and pairs positionally along K.
// ---------------------------------------------------------------------------

enum class Engine : std::uint8_t { Reference, Systolic, TensorCore, SparseTensorCore };

const char* engine_name(Engine e) noexcept;
/// "ref" | "sa" | "tc" | "stc"; throws std::invalid_argument.
Engine parse_engine(std::string_view name);

/// Direct evaluation with dot_product() (exact_dot_product() when trimming
/// is disabled).
Tensor<std::int32_t> reference_matmul(const QuantTensor& a, const QuantTensor& b,
                                      const SparqSettings& s);

struct SystolicGeometry {
  std::size_t rows = 8;
  std::size_t cols = 8;
};

/// Output-stationary systolic array. Activation pairs enter from the left
/// edge skewed by row, weight pairs (two weights per cycle) from the top
/// skewed by column; each PE accumulates one output. Larger problems are
/// tiled over the grid.
Tensor<std::int32_t> sa_matmul(const QuantTensor& a, const QuantTensor& b,
                               const SparqSettings& s, SystolicGeometry grid = {});

/// Tensor-core dot-product unit: four pairs (8 lanes) through four dual
/// multipliers, summed by an adder tree with the incoming accumulator.
/// Throws std::invalid_argument unless both spans hold exactly 8 lanes.
Accumulator tc_dot4(std::span<const std::uint8_t> x, std::span<const std::int8_t> w,
                    Accumulator acc, const SparqSettings& s);

/// Matmul composed from tc_dot4 steps along K (zero-padded to 8 lanes).
Tensor<std::int32_t> tc_matmul(const QuantTensor& a, const QuantTensor& b,
                               const SparqSettings& s);

// ---------------------------------------------------------------------------
// 2:4 structured sparsity.
// ---------------------------------------------------------------------------

/// 4-bit position mask of a 2:4 group; bit i set keeps position i.
using Mask24 = std::uint8_t;

struct FilteredGroup {
  std::array<std::uint8_t, 2> x{};
  std::array<std::int8_t, 2> w{};
};

/// Picks the two activations whose weights are kept by `mask`. Throws
/// std::invalid_argument if the mask does not select exactly two positions
/// or a weight outside the mask is non-zero.
FilteredGroup stc_filter(std::span<const std::uint8_t> x, std::span<const std::int8_t> w,
                         Mask24 mask);

struct PrunedWeights {
  QuantTensor weights;     // same shape and scales, two zeros per group
  Tensor<std::uint8_t> masks;  // shape with the group axis divided by 4
};

/// Magnitude 2:4 pruning: in each run of 4 adjacent weights along `axis`,
/// keep the two largest |w| (ties to the lower index). Throws
/// std::invalid_argument if the axis length is not a multiple of 4.
PrunedWeights make_24_mask(const QuantTensor& w, std::size_t axis);

/// Sparse tensor core: weights [K x N] are 2:4 along K with `masks`
/// [K/4 x N]; each group is filtered to one activation pair and fed to the
/// tc_dot4 unit.
Tensor<std::int32_t> stc_matmul(const QuantTensor& a, const QuantTensor& b,
                                const Tensor<std::uint8_t>& masks, const SparqSettings& s);

}  // namespace sparq
