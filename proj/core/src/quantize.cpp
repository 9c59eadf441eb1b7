#include "sparq/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sparq {

QuantTensor quantize_activations(const Tensor<float>& t, double max_abs) {
  if (!(max_abs > 0.0)) {
    throw std::invalid_argument("quantize_activations: max_abs must be positive");
  }
  Tensor<std::uint8_t> q(t.shape);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    const double x = t.data[i];
    if (!(x >= 0.0)) {
      throw std::invalid_argument(
          "unsigned activation violation: element " + std::to_string(i) + " is " +
          std::to_string(x));
    }
    // x * 255 / max_abs keeps grid points such as max_abs / 2 exact.
    const double code = std::floor(x * 255.0 / max_abs + 0.5);
    q.data[i] = static_cast<std::uint8_t>(std::min(code, 255.0));
  }
  return QuantTensor::activations(std::move(q), max_abs / 255.0);
}

QuantTensor quantize_weights_per_kernel(const Tensor<float>& w) {
  if (w.shape.empty()) throw std::invalid_argument("quantize_weights: scalar weights");
  const std::size_t kernels = w.shape.front();
  const std::size_t per = kernels ? w.data.size() / kernels : 0;
  Tensor<std::int8_t> q(w.shape);
  std::vector<double> scales(kernels, 1.0);
  for (std::size_t o = 0; o < kernels; ++o) {
    const auto first = w.data.begin() + static_cast<std::ptrdiff_t>(o * per);
    double max_abs = 0.0;
    for (auto it = first; it != first + static_cast<std::ptrdiff_t>(per); ++it) {
      if (std::isnan(*it)) throw std::invalid_argument("quantize_weights: NaN weight");
      max_abs = std::max(max_abs, std::abs(static_cast<double>(*it)));
    }
    if (max_abs == 0.0) continue;  // all-zero kernel: codes 0, scale 1
    scales[o] = max_abs / 127.0;
    for (std::size_t i = 0; i < per; ++i) {
      const double code = std::round(static_cast<double>(w.data[o * per + i]) * 127.0 / max_abs);
      q.data[o * per + i] = static_cast<std::int8_t>(std::clamp(code, -127.0, 127.0));
    }
  }
  return QuantTensor::weights(std::move(q), std::move(scales));
}

Tensor<float> dequantize_output(const Tensor<std::int32_t>& y, double act_scale,
                                std::span<const double> w_scales, std::size_t channel_axis) {
  if (channel_axis >= y.rank()) {
    throw std::invalid_argument("dequantize_output: channel axis out of range");
  }
  const std::size_t channels = y.shape[channel_axis];
  if (w_scales.size() != 1 && w_scales.size() != channels) {
    throw std::invalid_argument("dequantize_output: " + std::to_string(w_scales.size()) +
                                " weight scales for " + std::to_string(channels) + " channels");
  }
  std::size_t inner = 1;
  for (std::size_t d = channel_axis + 1; d < y.rank(); ++d) inner *= y.shape[d];
  Tensor<float> out(y.shape);
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const std::size_t c = (i / inner) % channels;
    const double ws = w_scales.size() == 1 ? w_scales[0] : w_scales[c];
    out.data[i] = static_cast<float>(static_cast<double>(y.data[i]) * act_scale * ws);
  }
  return out;
}

}  // namespace sparq
