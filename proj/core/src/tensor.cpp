#include "sparq/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace sparq {

std::size_t element_count(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

QuantTensor::QuantTensor(std::variant<Tensor<std::uint8_t>, Tensor<std::int8_t>> data,
                         std::vector<double> scales, std::size_t kernel_axis)
    : data_(std::move(data)), scales_(std::move(scales)), kernel_axis_(kernel_axis) {
  if (std::any_of(scales_.begin(), scales_.end(), [](double s) { return !(s > 0.0); })) {
    throw std::invalid_argument("quantization scales must be strictly positive");
  }
}

QuantTensor QuantTensor::activations(Tensor<std::uint8_t> data, double scale) {
  return QuantTensor(std::move(data), {scale}, 0);
}

QuantTensor QuantTensor::weights(Tensor<std::int8_t> data, std::vector<double> scales,
                                 std::size_t kernel_axis) {
  if (!data.shape.empty() && kernel_axis >= data.shape.size()) {
    throw std::invalid_argument("kernel axis out of range for shape " + shape_string(data.shape));
  }
  const std::size_t kernels = data.shape.empty() ? 1 : data.shape[kernel_axis];
  if (scales.size() != 1 && scales.size() != kernels) {
    throw std::invalid_argument("weight scales must be per-layer (1) or per-kernel (" +
                                std::to_string(kernels) + ")");
  }
  return QuantTensor(std::move(data), std::move(scales), kernel_axis);
}

const Shape& QuantTensor::shape() const noexcept {
  return std::visit([](const auto& t) -> const Shape& { return t.shape; }, data_);
}

const Tensor<std::uint8_t>& QuantTensor::u8() const {
  if (const auto* t = std::get_if<Tensor<std::uint8_t>>(&data_)) return *t;
  throw std::invalid_argument("expected an unsigned 8-bit tensor");
}

const Tensor<std::int8_t>& QuantTensor::i8() const {
  if (const auto* t = std::get_if<Tensor<std::int8_t>>(&data_)) return *t;
  throw std::invalid_argument("expected a signed 8-bit tensor");
}

}  // namespace sparq
