#include "sparq/vsparq.hpp"

#include <stdexcept>

namespace sparq {

PairEncoding encode_pair(std::uint8_t x_even, std::uint8_t x_odd, const TrimConfig& cfg,
                         bool rounding) {
  const int budget = 2 * cfg.bits();
  PairEncoding out;
  if (x_odd == 0) {
    out.mode = PairMode::LeftFull;
    out.left = trim_wide(x_even, budget, rounding);
  } else if (x_even == 0) {
    out.mode = PairMode::RightFull;
    out.right = trim_wide(x_odd, budget, rounding);
  } else {
    out.mode = PairMode::BothTrimmed;
    out.left = trim(x_even, cfg, rounding);
    out.right = trim(x_odd, cfg, rounding);
    out.mux_ctrl = false;
  }
  return out;
}

PairEncoding encode_pair_unpaired(std::uint8_t x_even, std::uint8_t x_odd,
                                  const TrimConfig& cfg, bool rounding) {
  return {PairMode::BothTrimmed, trim(x_even, cfg, rounding), trim(x_odd, cfg, rounding),
          false};
}

std::int32_t pair_contribution(const PairEncoding& p, std::int8_t w_even,
                               std::int8_t w_odd) noexcept {
  const auto left = static_cast<std::int32_t>(dequant(p.left));
  const auto right = static_cast<std::int32_t>(dequant(p.right));
  switch (p.mode) {
    case PairMode::LeftFull:
      return left * w_even;
    case PairMode::RightFull:
      return right * w_odd;
    case PairMode::BothTrimmed:
      break;
  }
  return left * w_even + right * w_odd;
}

std::int64_t dot_product(std::span<const std::uint8_t> x, std::span<const std::int8_t> w,
                         const TrimConfig& cfg, bool rounding, bool vsparq_enabled) {
  if (x.size() != w.size()) {
    throw std::invalid_argument("dot_product: activation/weight length mismatch");
  }
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < x.size(); i += 2) {
    const bool tail = i + 1 == x.size();
    const std::uint8_t xo = tail ? 0 : x[i + 1];
    const std::int8_t wo = tail ? 0 : w[i + 1];
    const PairEncoding p = vsparq_enabled ? encode_pair(x[i], xo, cfg, rounding)
                                          : encode_pair_unpaired(x[i], xo, cfg, rounding);
    acc += pair_contribution(p, w[i], wo);
  }
  return acc;
}

std::int64_t exact_dot_product(std::span<const std::uint8_t> x,
                               std::span<const std::int8_t> w) {
  if (x.size() != w.size()) {
    throw std::invalid_argument("exact_dot_product: activation/weight length mismatch");
  }
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::int32_t{x[i]} * w[i];
  return acc;
}

}  // namespace sparq
