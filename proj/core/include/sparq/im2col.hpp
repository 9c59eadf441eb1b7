#pragma once

#include <cstddef>
#include <utility>

#include "sparq/tensor.hpp"

namespace sparq {

struct ConvGeometry {
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Output spatial size (OH, OW). Throws std::invalid_argument if the kernel
/// does not fit the padded input or stride is 0.
std::pair<std::size_t, std::size_t> conv_output_size(std::size_t h, std::size_t w,
                                                     const ConvGeometry& g);

/// Unrolls patches of an unsigned [C x H x W] (or batched [N x C x H x W])
/// activation tensor into rows of a [N*OH*OW x C*kh*kw] matrix. Within a row
/// the layout is channel-major, then kernel row, then kernel column. Padding
/// contributes zeros. The activation scale carries over.
QuantTensor im2col(const QuantTensor& input, const ConvGeometry& g);

/// Reshapes [O x C x kh x kw] (or [O x I]) weights into the [K x O] matrix
/// that multiplies im2col rows; per-kernel scales move to the last axis.
QuantTensor weight_matrix(const QuantTensor& w);

}  // namespace sparq
