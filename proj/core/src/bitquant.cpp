#include "sparq/bitquant.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <sstream>
#include <stdexcept>

namespace sparq {
namespace {

std::string describe(int bits, const std::vector<int>& placements) {
  std::ostringstream os;
  os << 'n' << bits << '[';
  for (std::size_t i = 0; i < placements.size(); ++i) {
    if (i) os << ',';
    os << placements[i];
  }
  os << ']';
  return os.str();
}

std::vector<int> descending_placements(int top) {
  std::vector<int> out;
  for (int p = top; p >= 0; --p) out.push_back(p);
  return out;
}

// Placements are highest first, so the lowest window holding the leading one
// is found scanning from the back.
int lowest_window(unsigned x, int width, std::span<const int> placements) {
  for (auto it = placements.rbegin(); it != placements.rend(); ++it) {
    if (x < (1u << (*it + width))) return *it;
  }
  return placements.front();
}

TrimmedValue trim_windows(unsigned x, int width, std::span<const int> placements,
                          bool rounding) {
  const int p = lowest_window(x, width, placements);
  const unsigned limit = 1u << width;
  unsigned mantissa = x >> p;
  TrimmedValue out{static_cast<std::uint16_t>(mantissa), p, false};
  if (!rounding || p == 0) return out;

  const unsigned residual = x & ((1u << p) - 1u);
  if (residual < (1u << (p - 1))) return out;

  ++mantissa;
  if (mantissa < limit) {
    out.mantissa = static_cast<std::uint16_t>(mantissa);
    return out;
  }
  // Carry out of the window: 2^(p+width) lands exactly on the next placement.
  auto here = std::find(placements.begin(), placements.end(), p);
  if (here != placements.begin()) {
    const int up = *std::prev(here);
    out.shift = up;
    out.mantissa = static_cast<std::uint16_t>(1u << (p + width - up));
    return out;
  }
  out.mantissa = static_cast<std::uint16_t>(limit - 1u);
  out.saturated = true;
  return out;
}

}  // namespace

TrimConfig::TrimConfig(int bits, std::vector<int> placements, std::string name)
    : bits_(bits), placements_(std::move(placements)), name_(std::move(name)) {
  if (bits_ < 2 || bits_ > 4) {
    throw std::invalid_argument("TrimConfig: bits must be in [2, 4]");
  }
  if (placements_.empty()) {
    throw std::invalid_argument("TrimConfig: placements must be non-empty");
  }
  for (std::size_t i = 0; i < placements_.size(); ++i) {
    const int p = placements_[i];
    if (p < 0 || p > 8 - bits_) {
      throw std::invalid_argument("TrimConfig: placement out of range");
    }
    if (i > 0 && placements_[i - 1] <= p) {
      throw std::invalid_argument("TrimConfig: placements must be strictly decreasing");
    }
  }
  if (placements_.back() != 0) {
    throw std::invalid_argument("TrimConfig: lowest placement must be 0");
  }
  if (placements_.front() != 8 - bits_) {
    throw std::invalid_argument("TrimConfig: highest placement must be 8 - bits");
  }
  if (name_.empty()) name_ = describe(bits_, placements_);
}

TrimConfig TrimConfig::five_opt() { return {4, {4, 3, 2, 1, 0}, "5opt"}; }
TrimConfig TrimConfig::three_opt() { return {4, {4, 2, 0}, "3opt"}; }
TrimConfig TrimConfig::two_opt() { return {4, {4, 0}, "2opt"}; }
TrimConfig TrimConfig::six_opt() { return {3, descending_placements(5), "6opt"}; }
TrimConfig TrimConfig::seven_opt() { return {2, descending_placements(6), "7opt"}; }

TrimConfig TrimConfig::named(std::string_view name) {
  if (name == "5opt") return five_opt();
  if (name == "3opt") return three_opt();
  if (name == "2opt") return two_opt();
  if (name == "6opt") return six_opt();
  if (name == "7opt") return seven_opt();
  throw std::invalid_argument("unknown trim config '" + std::string(name) + "'");
}

const std::vector<std::string>& TrimConfig::names() {
  static const std::vector<std::string> all{"5opt", "3opt", "2opt", "6opt", "7opt"};
  return all;
}

bool TrimConfig::has_placement(int shift) const noexcept {
  return std::find(placements_.begin(), placements_.end(), shift) != placements_.end();
}

int TrimConfig::shift_id_bits() const noexcept {
  return static_cast<int>(std::bit_width(placements_.size() - 1));
}

int select_window(std::uint8_t x, const TrimConfig& cfg) {
  return lowest_window(x, cfg.bits(), cfg.placements());
}

TrimmedValue trim(std::uint8_t x, const TrimConfig& cfg, bool rounding) {
  return trim_windows(x, cfg.bits(), cfg.placements(), rounding);
}

std::uint32_t dequant(const TrimmedValue& t) noexcept {
  return static_cast<std::uint32_t>(t.mantissa) << t.shift;
}

TrimmedValue trim_wide(std::uint8_t x, int width, bool rounding) {
  if (width < 4 || width > 8) {
    throw std::invalid_argument("trim_wide: width must be in [4, 8]");
  }
  static const auto tables = [] {
    std::array<std::vector<int>, 9> t;
    for (int w = 4; w <= 8; ++w) t[w] = descending_placements(8 - w);
    return t;
  }();
  return trim_windows(x, width, tables[width], rounding);
}

TrimmedValue trim_wide(std::uint8_t x, int width, int cfg_bits, bool rounding) {
  if (width != 2 * cfg_bits) {
    throw std::invalid_argument("trim_wide: width must be twice the trimmed bit-width");
  }
  return trim_wide(x, width, rounding);
}

}  // namespace sparq
