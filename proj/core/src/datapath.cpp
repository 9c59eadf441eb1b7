#include "sparq/datapath.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace sparq {
namespace {

struct MatmulDims {
  std::size_t m, k, n;
};

MatmulDims check_operands(const QuantTensor& a, const QuantTensor& b) {
  if (a.is_signed()) throw std::invalid_argument("matmul: activations must be unsigned 8-bit");
  if (!b.is_signed()) throw std::invalid_argument("matmul: weights must be signed 8-bit");
  if (a.rank() != 2 || b.rank() != 2) {
    throw std::invalid_argument("matmul: operands must be 2-D, got " +
                                shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  if (a.shape()[1] != b.shape()[0]) {
    throw std::invalid_argument("matmul: inner dimensions disagree: " +
                                shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  return {a.shape()[0], a.shape()[1], b.shape()[1]};
}

// Columns of B made contiguous, so column j is w_t[j*k, (j+1)*k).
std::vector<std::int8_t> transpose(const Tensor<std::int8_t>& b, std::size_t k, std::size_t n) {
  std::vector<std::int8_t> out(k * n);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[c * k + r] = b.data[r * n + c];
  }
  return out;
}

std::int32_t narrow_result(std::int64_t v) {
  if (v < std::numeric_limits<std::int32_t>::min() ||
      v > std::numeric_limits<std::int32_t>::max()) {
    throw std::overflow_error("matmul: output exceeds the 32-bit accumulator range");
  }
  return static_cast<std::int32_t>(v);
}

Accumulator dot4(const PairDatapath& dp, std::span<const std::uint8_t> x,
                 std::span<const std::int8_t> w, Accumulator acc) {
  std::array<std::int32_t, 4> products{};
  for (std::size_t lane = 0; lane < 4; ++lane) {
    const auto pair = dp.encode(x[2 * lane], x[2 * lane + 1]);
    products[lane] = dp.multiply(pair, w[2 * lane], w[2 * lane + 1]);
  }
  // Adder tree; each product is below 2^16 in magnitude.
  const std::int32_t tree = (products[0] + products[1]) + (products[2] + products[3]);
  acc.add(tree);
  return acc;
}

}  // namespace

// --- DualMultiplier --------------------------------------------------------

DualMultiplier::DualMultiplier(int mantissa_bits, std::vector<int> shifts)
    : bits_(mantissa_bits), shifts_(std::move(shifts)) {
  if (bits_ < 2 || bits_ > 4) {
    throw std::invalid_argument("DualMultiplier: mantissa width must be in [2, 4]");
  }
  for (int s : shifts_) {
    if (s < 0 || s > 8 - bits_) {
      throw std::invalid_argument("DualMultiplier: shift " + std::to_string(s) +
                                  " outside [0, " + std::to_string(8 - bits_) + "]");
    }
  }
  std::sort(shifts_.begin(), shifts_.end(), std::greater<>{});
  shifts_.erase(std::unique(shifts_.begin(), shifts_.end()), shifts_.end());
}

DualMultiplier DualMultiplier::for_config(const TrimConfig& cfg) {
  const int n = cfg.bits();
  std::vector<int> shifts(cfg.placements().begin(), cfg.placements().end());
  for (int p = 0; p <= 8 - 2 * n; ++p) {
    shifts.push_back(p + n);
    shifts.push_back(p);
  }
  return {n, std::move(shifts)};
}

DualMultiplier DualMultiplier::int8() { return {4, {4, 0}}; }

std::int32_t DualMultiplier::operator()(const DualMultInput& in) const {
  const auto term = [&](std::uint16_t x, std::int8_t w, int opt) -> std::int32_t {
    if (x >= (1u << bits_)) {
      throw std::invalid_argument("DualMultiplier: mantissa " + std::to_string(x) +
                                  " wider than " + std::to_string(bits_) + " bits");
    }
    if (std::find(shifts_.begin(), shifts_.end(), opt) == shifts_.end()) {
      throw std::invalid_argument("DualMultiplier: unsupported shift " + std::to_string(opt));
    }
    // Exact product, then shift-left; no intermediate truncation.
    return (static_cast<std::int32_t>(x) * w) * (std::int32_t{1} << opt);
  };
  switch (in.mux) {
    case WeightSelect::FirstOnly:
      return term(in.x1, in.w1, in.opt1);
    case WeightSelect::SecondOnly:
      return term(in.x2, in.w2, in.opt2);
    case WeightSelect::Both:
      break;
  }
  return term(in.x1, in.w1, in.opt1) + term(in.x2, in.w2, in.opt2);
}

std::int32_t dual_multiply(const DualMultInput& in) {
  static const DualMultiplier full{4, {4, 3, 2, 1, 0}};
  return full(in);
}

std::int32_t dual_multiply(const DualMultInput& in, const TrimConfig& cfg) {
  return DualMultiplier::for_config(cfg)(in);
}

DualMultInput split_int8(std::uint8_t x, std::int8_t w) noexcept {
  return {static_cast<std::uint16_t>(x >> 4), static_cast<std::uint16_t>(x & 0x0F), w, w, 4, 0,
          WeightSelect::Both};
}

// --- PE plumbing -----------------------------------------------------------

void Accumulator::add(std::int64_t term) {
  const std::int64_t next = std::int64_t{value} + term;
  if (next < std::numeric_limits<std::int32_t>::min() ||
      next > std::numeric_limits<std::int32_t>::max()) {
    throw std::overflow_error("accumulator overflow");
  }
  value = static_cast<std::int32_t>(next);
}

PairDatapath::PairDatapath(SparqSettings settings)
    : settings_(std::move(settings)),
      mult_(settings_.trim ? DualMultiplier::for_config(*settings_.trim)
                           : DualMultiplier::int8()) {}

ActivationPair PairDatapath::encode(std::uint8_t even, std::uint8_t odd) const {
  ActivationPair out{even, odd, {}};
  if (settings_.trim) {
    out.encoding = settings_.vsparq
                       ? encode_pair(even, odd, *settings_.trim, settings_.rounding)
                       : encode_pair_unpaired(even, odd, *settings_.trim, settings_.rounding);
  }
  return out;
}

std::int32_t PairDatapath::multiply(const ActivationPair& a, std::int8_t w_even,
                                    std::int8_t w_odd) const {
  if (!settings_.trim) {
    return mult_(split_int8(a.even, w_even)) + mult_(split_int8(a.odd, w_odd));
  }
  const PairEncoding& e = a.encoding;
  if (e.mode == PairMode::BothTrimmed) {
    return mult_({e.left.mantissa, e.right.mantissa, w_even, w_odd, e.left.shift,
                  e.right.shift, WeightSelect::Both});
  }
  // A full-budget member spans 2n bits: split into two n-bit halves that
  // share the member's weight.
  const int n = mult_.mantissa_bits();
  const bool left = e.mode == PairMode::LeftFull;
  const TrimmedValue& t = left ? e.left : e.right;
  const std::int8_t w = left ? w_even : w_odd;
  const auto hi = static_cast<std::uint16_t>(t.mantissa >> n);
  const auto lo = static_cast<std::uint16_t>(t.mantissa & ((1u << n) - 1u));
  return mult_({hi, lo, w, w, t.shift + n, t.shift, WeightSelect::Both});
}

// --- Engines ---------------------------------------------------------------

const char* engine_name(Engine e) noexcept {
  switch (e) {
    case Engine::Reference:
      return "ref";
    case Engine::Systolic:
      return "sa";
    case Engine::TensorCore:
      return "tc";
    case Engine::SparseTensorCore:
      return "stc";
  }
  return "?";
}

Engine parse_engine(std::string_view name) {
  if (name == "ref") return Engine::Reference;
  if (name == "sa") return Engine::Systolic;
  if (name == "tc") return Engine::TensorCore;
  if (name == "stc") return Engine::SparseTensorCore;
  throw std::invalid_argument("unknown engine '" + std::string(name) +
                              "' (expected ref, sa, tc or stc)");
}

Tensor<std::int32_t> reference_matmul(const QuantTensor& a, const QuantTensor& b,
                                      const SparqSettings& s) {
  const auto [m, k, n] = check_operands(a, b);
  const auto& x = a.u8().data;
  const auto wt = transpose(b.i8(), k, n);
  Tensor<std::int32_t> out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const std::span<const std::uint8_t> row(x.data() + i * k, k);
    for (std::size_t j = 0; j < n; ++j) {
      const std::span<const std::int8_t> col(wt.data() + j * k, k);
      const std::int64_t v = s.trim ? dot_product(row, col, *s.trim, s.rounding, s.vsparq)
                                    : exact_dot_product(row, col);
      out.data[i * n + j] = narrow_result(v);
    }
  }
  return out;
}

Tensor<std::int32_t> sa_matmul(const QuantTensor& a, const QuantTensor& b,
                               const SparqSettings& s, SystolicGeometry grid) {
  const auto [m, k, n] = check_operands(a, b);
  if (grid.rows == 0 || grid.cols == 0) {
    throw std::invalid_argument("sa_matmul: systolic grid must be non-empty");
  }
  const PairDatapath dp(s);
  const auto& x = a.u8().data;
  const auto& w = b.i8().data;
  const std::size_t pairs = (k + 1) / 2;

  struct ActToken {
    std::size_t step;
    ActivationPair pair;
  };
  struct WeightToken {
    std::size_t step;
    std::int8_t even, odd;
  };

  // Pairs are encoded once at the array edge, at the activation rate.
  std::vector<ActivationPair> encoded(m * pairs);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < pairs; ++p) {
      const std::size_t c = 2 * p;
      encoded[i * pairs + p] = dp.encode(x[i * k + c], c + 1 < k ? x[i * k + c + 1] : 0);
    }
  }

  Tensor<std::int32_t> out({m, n});
  for (std::size_t r0 = 0; r0 < m; r0 += grid.rows) {
    for (std::size_t c0 = 0; c0 < n; c0 += grid.cols) {
      const std::size_t rows = std::min(grid.rows, m - r0);
      const std::size_t cols = std::min(grid.cols, n - c0);
      std::vector<std::optional<ActToken>> act(rows * cols), act_next(rows * cols);
      std::vector<std::optional<WeightToken>> wgt(rows * cols), wgt_next(rows * cols);
      std::vector<Accumulator> psum(rows * cols);

      const std::size_t cycles = pairs + rows + cols - 2;
      for (std::size_t t = 0; t < cycles; ++t) {
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t pe = i * cols + j;
            std::optional<ActToken> a_in;
            if (j == 0) {
              if (t >= i && t - i < pairs) {
                a_in = ActToken{t - i, encoded[(r0 + i) * pairs + (t - i)]};
              }
            } else {
              a_in = act[pe - 1];
            }
            std::optional<WeightToken> w_in;
            if (i == 0) {
              if (t >= j && t - j < pairs) {
                const std::size_t c = 2 * (t - j);
                const std::size_t col = c0 + j;
                w_in = WeightToken{t - j, w[c * n + col],
                                   c + 1 < k ? w[(c + 1) * n + col] : std::int8_t{0}};
              }
            } else {
              w_in = wgt[pe - cols];
            }
            if (a_in && w_in) {
              if (a_in->step != w_in->step) {
                throw std::logic_error("sa_matmul: skewed operands out of step");
              }
              psum[pe].add(dp.multiply(a_in->pair, w_in->even, w_in->odd));
            }
            act_next[pe] = a_in;
            wgt_next[pe] = w_in;
          }
        }
        std::swap(act, act_next);
        std::swap(wgt, wgt_next);
      }
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
          out.data[(r0 + i) * n + (c0 + j)] = psum[i * cols + j].value;
        }
      }
    }
  }
  return out;
}

Accumulator tc_dot4(std::span<const std::uint8_t> x, std::span<const std::int8_t> w,
                    Accumulator acc, const SparqSettings& s) {
  if (x.size() != 8 || w.size() != 8) {
    throw std::invalid_argument("tc_dot4: expected 8 activation and 8 weight lanes");
  }
  return dot4(PairDatapath(s), x, w, acc);
}

Tensor<std::int32_t> tc_matmul(const QuantTensor& a, const QuantTensor& b,
                               const SparqSettings& s) {
  const auto [m, k, n] = check_operands(a, b);
  const PairDatapath dp(s);
  const auto& x = a.u8().data;
  const auto wt = transpose(b.i8(), k, n);
  Tensor<std::int32_t> out({m, n});
  std::array<std::uint8_t, 8> xl{};
  std::array<std::int8_t, 8> wl{};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Accumulator acc;
      for (std::size_t c = 0; c < k; c += 8) {
        xl.fill(0);
        wl.fill(0);
        const std::size_t len = std::min<std::size_t>(8, k - c);
        std::copy_n(x.data() + i * k + c, len, xl.begin());
        std::copy_n(wt.data() + j * k + c, len, wl.begin());
        acc = dot4(dp, xl, wl, acc);
      }
      out.data[i * n + j] = acc.value;
    }
  }
  return out;
}

// --- 2:4 sparsity ----------------------------------------------------------

FilteredGroup stc_filter(std::span<const std::uint8_t> x, std::span<const std::int8_t> w,
                         Mask24 mask) {
  if (x.size() != 4 || w.size() != 4) {
    throw std::invalid_argument("stc_filter: expected groups of 4 lanes");
  }
  if ((mask & ~0x0Fu) != 0 || std::popcount(static_cast<unsigned>(mask)) != 2) {
    throw std::invalid_argument("stc_filter: 2:4 mask must select exactly two of four positions");
  }
  FilteredGroup out;
  std::size_t slot = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (mask & (1u << i)) {
      out.x[slot] = x[i];
      out.w[slot] = w[i];
      ++slot;
    } else if (w[i] != 0) {
      throw std::invalid_argument("stc_filter: non-zero weight outside the 2:4 mask");
    }
  }
  return out;
}

PrunedWeights make_24_mask(const QuantTensor& w, std::size_t axis) {
  const auto& src = w.i8();
  if (axis >= src.rank()) throw std::invalid_argument("make_24_mask: axis out of range");
  const std::size_t len = src.shape[axis];
  if (len % 4 != 0) {
    throw std::invalid_argument("make_24_mask: group axis length " + std::to_string(len) +
                                " is not a multiple of 4");
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= src.shape[d];
  for (std::size_t d = axis + 1; d < src.rank(); ++d) inner *= src.shape[d];

  Tensor<std::int8_t> pruned(src.shape);
  Shape mask_shape = src.shape;
  mask_shape[axis] = len / 4;
  Tensor<std::uint8_t> masks(mask_shape);

  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t g = 0; g < len / 4; ++g) {
      for (std::size_t in = 0; in < inner; ++in) {
        std::array<std::size_t, 4> at{};
        std::array<int, 4> order{0, 1, 2, 3};
        for (std::size_t l = 0; l < 4; ++l) at[l] = (o * len + g * 4 + l) * inner + in;
        std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
          return std::abs(int{src.data[at[lhs]]}) > std::abs(int{src.data[at[rhs]]});
        });
        Mask24 mask = 0;
        for (int keep : {order[0], order[1]}) {
          mask |= static_cast<Mask24>(1u << keep);
          pruned.data[at[keep]] = src.data[at[keep]];
        }
        masks.data[(o * (len / 4) + g) * inner + in] = mask;
      }
    }
  }
  return {QuantTensor::weights(std::move(pruned), w.scales(), w.kernel_axis()), std::move(masks)};
}

Tensor<std::int32_t> stc_matmul(const QuantTensor& a, const QuantTensor& b,
                                const Tensor<std::uint8_t>& masks, const SparqSettings& s) {
  const auto [m, k, n] = check_operands(a, b);
  if (k % 4 != 0) {
    throw std::invalid_argument("stc_matmul: reduction length must be a multiple of 4");
  }
  const std::size_t groups = k / 4;
  if (masks.shape != Shape{groups, n}) {
    throw std::invalid_argument("stc_matmul: mask shape " + shape_string(masks.shape) +
                                " does not match " + shape_string({groups, n}));
  }
  const PairDatapath dp(s);
  const auto& x = a.u8().data;
  const auto wt = transpose(b.i8(), k, n);
  Tensor<std::int32_t> out({m, n});
  std::array<std::uint8_t, 8> xl{};
  std::array<std::int8_t, 8> wl{};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Accumulator acc;
      // Four filtered groups fill the 8 lanes of one DP step.
      for (std::size_t g0 = 0; g0 < groups; g0 += 4) {
        xl.fill(0);
        wl.fill(0);
        for (std::size_t g = g0; g < std::min(groups, g0 + 4); ++g) {
          const auto f = stc_filter({x.data() + i * k + 4 * g, 4}, {wt.data() + j * k + 4 * g, 4},
                                    masks.data[g * n + j]);
          const std::size_t lane = 2 * (g - g0);
          xl[lane] = f.x[0];
          xl[lane + 1] = f.x[1];
          wl[lane] = f.w[0];
          wl[lane + 1] = f.w[1];
        }
        acc = dot4(dp, xl, wl, acc);
      }
      out.data[i * n + j] = acc.value;
    }
  }
  return out;
}

}  // namespace sparq
