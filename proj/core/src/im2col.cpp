#include "sparq/im2col.hpp"

#include <stdexcept>

namespace sparq {

std::pair<std::size_t, std::size_t> conv_output_size(std::size_t h, std::size_t w,
                                                     const ConvGeometry& g) {
  if (g.stride == 0) throw std::invalid_argument("im2col: stride must be positive");
  if (g.kernel_h == 0 || g.kernel_w == 0) {
    throw std::invalid_argument("im2col: kernel must be non-empty");
  }
  const std::size_t ph = h + 2 * g.padding;
  const std::size_t pw = w + 2 * g.padding;
  if (g.kernel_h > ph || g.kernel_w > pw) {
    throw std::invalid_argument("im2col: kernel larger than padded input");
  }
  return {(ph - g.kernel_h) / g.stride + 1, (pw - g.kernel_w) / g.stride + 1};
}

QuantTensor im2col(const QuantTensor& input, const ConvGeometry& g) {
  const auto& src = input.u8();
  if (src.rank() != 3 && src.rank() != 4) {
    throw std::invalid_argument("im2col: expected [C,H,W] or [N,C,H,W], got " +
                                shape_string(src.shape));
  }
  const std::size_t off = src.rank() - 3;
  const std::size_t batch = off ? src.shape[0] : 1;
  const std::size_t c = src.shape[off], h = src.shape[off + 1], w = src.shape[off + 2];
  const auto [oh, ow] = conv_output_size(h, w, g);
  const std::size_t cols = c * g.kernel_h * g.kernel_w;

  Tensor<std::uint8_t> out({batch * oh * ow, cols});
  std::size_t row = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const std::uint8_t* image = src.data.data() + b * c * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++row) {
        std::uint8_t* dst = out.data.data() + row * cols;
        for (std::size_t ch = 0; ch < c; ++ch) {
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
              // Signed arithmetic: padded coordinates may be negative.
              const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                              static_cast<std::ptrdiff_t>(g.padding);
              const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                              static_cast<std::ptrdiff_t>(g.padding);
              const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(h) &&
                                  ix < static_cast<std::ptrdiff_t>(w);
              *dst++ = inside ? image[(ch * h + static_cast<std::size_t>(iy)) * w +
                                      static_cast<std::size_t>(ix)]
                              : 0;
            }
          }
        }
      }
    }
  }
  return QuantTensor::activations(std::move(out), input.scales().front());
}

QuantTensor weight_matrix(const QuantTensor& w) {
  const auto& src = w.i8();
  if (src.rank() != 2 && src.rank() != 4) {
    throw std::invalid_argument("weight_matrix: expected [O,C,kh,kw] or [O,I], got " +
                                shape_string(src.shape));
  }
  const std::size_t o = src.shape[0];
  const std::size_t k = o ? src.data.size() / o : 0;
  Tensor<std::int8_t> out({k, o});
  for (std::size_t r = 0; r < o; ++r) {
    for (std::size_t i = 0; i < k; ++i) out.data[i * o + r] = src.data[r * k + i];
  }
  return QuantTensor::weights(std::move(out), w.scales(), 1);
}

}  // namespace sparq
