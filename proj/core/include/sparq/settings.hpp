#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "sparq/bitquant.hpp"

namespace sparq {

/// One point on the ablation grid: trim variant (empty = exact INT8),
/// rounding on/off and zero-aware pairing on/off.
struct SparqSettings {
  std::optional<TrimConfig> trim;
  bool rounding = true;
  bool vsparq = true;

  bool exact() const noexcept { return !trim.has_value(); }

  /// "exact", or e.g. "5opt+R", "3opt-R", "2opt+R-vS".
  std::string descriptor() const;

  /// Parses a descriptor. A bare config name ("3opt") takes the given
  /// defaults for rounding and pairing. Throws std::invalid_argument.
  static SparqSettings parse(std::string_view token, bool default_rounding = true,
                             bool default_vsparq = true);
};

}  // namespace sparq
