#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sparq {

/// A dynamic bit-window trimming variant: keep `bits` consecutive bits of an
/// 8-bit activation, positioned at one of `placements` (window LSB indices).
///
/// Placements are stored highest first. The lowest placement is always 0 so
/// small values stay exact, and the highest is always 8 - bits so that every
/// 8-bit value has a window containing its leading one.
class TrimConfig {
 public:
  /// Throws std::invalid_argument when the invariants above do not hold or
  /// when bits is outside [2, 4].
  TrimConfig(int bits, std::vector<int> placements, std::string name = {});

  static TrimConfig five_opt();   // n=4, [4,3,2,1,0]
  static TrimConfig three_opt();  // n=4, [4,2,0]
  static TrimConfig two_opt();    // n=4, [4,0]
  static TrimConfig six_opt();    // n=3, [5..0]
  static TrimConfig seven_opt();  // n=2, [6..0]

  /// Looks up one of "5opt", "3opt", "2opt", "6opt", "7opt".
  static TrimConfig named(std::string_view name);
  static const std::vector<std::string>& names();

  int bits() const noexcept { return bits_; }
  std::span<const int> placements() const noexcept { return placements_; }
  bool has_placement(int shift) const noexcept;

  /// ShiftCtrl width: ceil(log2(number of placements)).
  int shift_id_bits() const noexcept;

  /// "5opt" etc. for the named variants, "n4[4,2,0]" style otherwise.
  const std::string& name() const noexcept { return name_; }

  friend bool operator==(const TrimConfig& a, const TrimConfig& b) {
    return a.bits_ == b.bits_ && a.placements_ == b.placements_;
  }

 private:
  int bits_;
  std::vector<int> placements_;
  std::string name_;
};

/// One trimmed activation: `mantissa` occupies the window, `shift` is the
/// window LSB (the shift-left needed to reconstruct), `saturated` records a
/// rounding overflow in the top window that had to be clamped.
struct TrimmedValue {
  std::uint16_t mantissa = 0;
  int shift = 0;
  bool saturated = false;

  friend bool operator==(const TrimmedValue&, const TrimmedValue&) = default;
};

/// Lowest placement whose window still holds the leading one of `x`
/// (placement 0 for x == 0).
int select_window(std::uint8_t x, const TrimConfig& cfg);

/// Keeps the selected window of `x`. With `rounding`, the residual bits
/// below the window round half-up; a carry out of the window moves the
/// result to the next placement up, and only in the top window is the
/// mantissa clamped (saturated = true).
TrimmedValue trim(std::uint8_t x, const TrimConfig& cfg, bool rounding);

/// mantissa * 2^shift.
std::uint32_t dequant(const TrimmedValue& t) noexcept;

/// Same semantics as trim() with a `width`-bit window over every placement
/// in [8 - width, 0]; the budget a lone non-zero activation receives when its
/// partner is zero. width = 8 is the identity. Throws std::invalid_argument
/// unless 4 <= width <= 8.
TrimmedValue trim_wide(std::uint8_t x, int width, bool rounding);

/// Overload that checks width == 2 * cfg_bits.
TrimmedValue trim_wide(std::uint8_t x, int width, int cfg_bits, bool rounding);

}  // namespace sparq
