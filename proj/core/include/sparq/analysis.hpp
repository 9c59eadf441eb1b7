#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "sparq/bitquant.hpp"
#include "sparq/settings.hpp"
#include "sparq/tensor.hpp"

namespace sparq {

/// Per-bit set frequency over the non-zero elements (index = bit position).
struct ToggleStats {
  std::array<double, 8> rates{};
  std::size_t nonzero = 0;
  std::size_t total = 0;
  bool empty = true;  // no non-zero element seen; rates are all 0
};

ToggleStats bit_toggle_stats(std::span<const std::uint8_t> x);

/// Probability that at least one bit in [hi:lo] is set, treating bits as
/// independent: 1 - prod(1 - rate_b). Throws std::invalid_argument for a
/// rate outside [0, 1] or a bad window.
double msb_window_probability(const std::array<double, 8>& rates, int hi, int lo);

/// Measured fraction of non-zero elements with a bit set in [hi:lo].
double msb_window_empirical(std::span<const std::uint8_t> x, int hi, int lo);

double activation_sparsity(std::span<const std::uint8_t> x) noexcept;

/// Fraction of adjacent (even, odd) pairs with at least one zero, pairing
/// within rows of `row_length` elements (odd rows pad with a zero).
double pair_zero_fraction(std::span<const std::uint8_t> x, std::size_t row_length);

struct ErrorMetrics {
  double mse = 0.0;
  double sqnr_db = 0.0;  // +inf when mse == 0, -inf when the signal is 0
};

/// Throws std::invalid_argument on size mismatch.
ErrorMetrics error_metrics(std::span<const std::int32_t> exact,
                           std::span<const std::int32_t> approx);
ErrorMetrics error_metrics(const Tensor<std::int32_t>& exact,
                           const Tensor<std::int32_t>& approx);

/// ShiftCtrl bits plus one MuxCtrl bit when pairing is on.
int metadata_overhead(const TrimConfig& cfg, bool vsparq) noexcept;
int metadata_overhead(const SparqSettings& s) noexcept;

struct SimReport {
  std::string config;  // SparqSettings descriptor
  std::string trim;    // "5opt" ... or "exact"
  bool rounding = false;
  bool vsparq = false;
  std::string engine;
  std::optional<std::uint64_t> seed;
  double mse = 0.0;
  double sqnr_db = 0.0;
  double activation_sparsity = 0.0;
  double pair_zero_fraction = 0.0;
  std::array<double, 8> toggle_rates{};
  bool toggle_empty = true;
  double msb_window_probability = 0.0;  // [7:4], independence model
  int metadata_bits_per_activation = 0;
  bool exempt = false;
  bool pruned = false;
};

/// Statistics for activations `a` ([M x K]) and the error of `approx`
/// against the exact INT8 result.
SimReport make_report(const Tensor<std::uint8_t>& a, const Tensor<std::int32_t>& exact,
                      const Tensor<std::int32_t>& approx, const SparqSettings& s,
                      std::string engine);

/// Flat JSON object; non-finite sqnr_db is written as "inf" / "-inf".
nlohmann::json to_json(const SimReport& r);

// Synthetic inputs -------------------------------------------------------

/// Bell-shaped post-ReLU activations: round(|N(0, sigma)|) clipped to
/// [0, 255], with each element forced to zero with probability
/// `zero_fraction`.
struct SyntheticActivations {
  double sigma = 32.0;
  double zero_fraction = 0.5;
  std::uint64_t seed = 0;
};

Tensor<std::uint8_t> synthetic_activations(const Shape& shape, const SyntheticActivations& params);

/// round(N(0, sigma)) clipped to [-127, 127].
Tensor<std::int8_t> synthetic_weights(const Shape& shape, double sigma, std::uint64_t seed);

}  // namespace sparq
