#pragma once

#include <cstddef>
#include <span>

#include "sparq/tensor.hpp"

namespace sparq {

/// Symmetric unsigned per-layer quantization of post-ReLU activations:
/// scale = max_abs / 255, code = round_half_up(x / scale) clamped to
/// [0, 255]. Throws std::invalid_argument for max_abs <= 0 or a negative
/// (or NaN) element.
QuantTensor quantize_activations(const Tensor<float>& t, double max_abs);

/// Symmetric signed per-kernel quantization; the kernel axis is the leading
/// one. scale_o = max|w_o| / 127 (1 for an all-zero kernel), codes rounded
/// half away from zero and clamped to [-127, 127].
QuantTensor quantize_weights_per_kernel(const Tensor<float>& w);

/// y * act_scale * w_scale[c], with c the index along `channel_axis`. A
/// single weight scale broadcasts. Throws std::invalid_argument when the
/// scale count does not match the channel dimension.
Tensor<float> dequantize_output(const Tensor<std::int32_t>& y, double act_scale,
                                std::span<const double> w_scales, std::size_t channel_axis = 0);

}  // namespace sparq
