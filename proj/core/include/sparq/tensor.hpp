#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sparq {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

/// Dense row-major (C-contiguous) tensor.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(element_count(shape)) {}
  Tensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != element_count(shape)) {
      throw std::invalid_argument("tensor data size does not match shape " +
                                  shape_string(shape));
    }
  }

  std::size_t rank() const noexcept { return shape.size(); }
  std::size_t size() const noexcept { return data.size(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Result of symmetric min-max quantization: unsigned 8-bit activations with
/// a single per-layer scale, or signed 8-bit weights with either one scale or
/// one scale per kernel. The kernel axis is the leading one for [O x ...]
/// weights and the last one once lowered to a [K x O] matrix. The quantizer
/// never emits -128, but the datapath accepts it.
class QuantTensor {
 public:
  static QuantTensor activations(Tensor<std::uint8_t> data, double scale = 1.0);
  static QuantTensor weights(Tensor<std::int8_t> data, std::vector<double> scales = {1.0},
                             std::size_t kernel_axis = 0);

  bool is_signed() const noexcept { return data_.index() == 1; }
  const Shape& shape() const noexcept;
  std::size_t rank() const noexcept { return shape().size(); }
  const std::vector<double>& scales() const noexcept { return scales_; }
  std::size_t kernel_axis() const noexcept { return kernel_axis_; }

  /// Throw std::invalid_argument on dtype mismatch.
  const Tensor<std::uint8_t>& u8() const;
  const Tensor<std::int8_t>& i8() const;

 private:
  QuantTensor(std::variant<Tensor<std::uint8_t>, Tensor<std::int8_t>> data,
              std::vector<double> scales, std::size_t kernel_axis);

  std::variant<Tensor<std::uint8_t>, Tensor<std::int8_t>> data_;
  std::vector<double> scales_;
  std::size_t kernel_axis_ = 0;
};

}  // namespace sparq
