#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sparq/tensor.hpp"

// NumPy .npy v1.0 reading and writing for the dtypes this project exchanges:
// u1, i1, little-endian i4 and f4, C order only.

namespace sparq::npy {

enum class DType : std::uint8_t { U8, I8, I32, F32 };

const char* dtype_name(DType d) noexcept;  // "u1", "i1", "i4", "f4"

struct Array {
  Shape shape;
  std::variant<std::vector<std::uint8_t>, std::vector<std::int8_t>, std::vector<std::int32_t>,
               std::vector<float>>
      data;

  DType dtype() const noexcept { return static_cast<DType>(data.index()); }

  /// Copies out as a typed tensor; throws std::invalid_argument if the
  /// stored dtype differs.
  template <typename T>
  Tensor<T> as() const {
    if (const auto* v = std::get_if<std::vector<T>>(&data)) return Tensor<T>(shape, *v);
    throw std::invalid_argument(std::string("npy: unexpected dtype ") + dtype_name(dtype()));
  }
};

/// Throws std::runtime_error on malformed input or unsupported dtype/order.
Array decode(std::span<const std::byte> bytes);
Array read(const std::filesystem::path& path);

std::vector<std::byte> encode(const Array& array);
void write(const std::filesystem::path& path, const Array& array);

template <typename T>
Array from_tensor(const Tensor<T>& t) {
  return Array{t.shape, t.data};
}

template <typename T>
void write(const std::filesystem::path& path, const Tensor<T>& t) {
  write(path, from_tensor(t));
}

}  // namespace sparq::npy
