#pragma once

#include <cstdint>
#include <span>

#include "sparq/bitquant.hpp"

namespace sparq {

enum class PairMode : std::uint8_t { LeftFull, RightFull, BothTrimmed };

/// Encoding of one adjacent (even, odd) activation pair.
///
/// In the full modes the non-zero member is kept at the 2n-bit budget
/// (exact for n = 4) and the other slot is the canonical zero. `mux_ctrl`
/// is the per-pair selector bit: set when the pair runs as a single
/// full-budget product, clear when it runs as two trimmed products.
struct PairEncoding {
  PairMode mode = PairMode::LeftFull;
  TrimmedValue left;
  TrimmedValue right;
  bool mux_ctrl = true;

  friend bool operator==(const PairEncoding&, const PairEncoding&) = default;
};

/// Zero-aware pair encoding. (0, 0) encodes as LeftFull.
PairEncoding encode_pair(std::uint8_t x_even, std::uint8_t x_odd, const TrimConfig& cfg,
                         bool rounding);

/// Encoding used with pairing disabled: both members trimmed to n bits
/// whether or not either is zero.
PairEncoding encode_pair_unpaired(std::uint8_t x_even, std::uint8_t x_odd,
                                  const TrimConfig& cfg, bool rounding);

std::int32_t pair_contribution(const PairEncoding& p, std::int8_t w_even,
                               std::int8_t w_odd) noexcept;

/// Reference SPARQ dot product over consecutive (even, odd) pairs. An odd
/// trailing activation is paired with an implicit zero. With
/// `vsparq_enabled` false every activation is trimmed on its own.
/// Throws std::invalid_argument on length mismatch.
std::int64_t dot_product(std::span<const std::uint8_t> x, std::span<const std::int8_t> w,
                         const TrimConfig& cfg, bool rounding, bool vsparq_enabled);

/// Plain INT8 dot product.
std::int64_t exact_dot_product(std::span<const std::uint8_t> x,
                               std::span<const std::int8_t> w);

}  // namespace sparq
