#include "sparq/settings.hpp"

#include <stdexcept>

namespace sparq {

std::string SparqSettings::descriptor() const {
  if (exact()) return "exact";
  std::string out = trim->name();
  out += rounding ? "+R" : "-R";
  if (!vsparq) out += "-vS";
  return out;
}

SparqSettings SparqSettings::parse(std::string_view token, bool default_rounding,
                                   bool default_vsparq) {
  if (token == "exact" || token == "int8") return SparqSettings{};
  const auto bad = [&] {
    return std::invalid_argument("bad config '" + std::string(token) +
                                 "' (expected e.g. 5opt, 3opt+R, 2opt-R-vS, exact)");
  };
  const std::size_t name_end = token.find_first_of("+-");
  SparqSettings s;
  try {
    s.trim = TrimConfig::named(token.substr(0, name_end));
  } catch (const std::invalid_argument&) {
    throw bad();
  }
  s.rounding = default_rounding;
  s.vsparq = default_vsparq;
  std::string_view rest = name_end == std::string_view::npos ? "" : token.substr(name_end);
  while (!rest.empty()) {
    if (rest.starts_with("+R")) {
      s.rounding = true;
      rest.remove_prefix(2);
    } else if (rest.starts_with("-R")) {
      s.rounding = false;
      rest.remove_prefix(2);
    } else if (rest.starts_with("-vS")) {
      s.vsparq = false;
      rest.remove_prefix(3);
    } else if (rest.starts_with("+vS")) {
      s.vsparq = true;
      rest.remove_prefix(3);
    } else {
      throw bad();
    }
  }
  return s;
}

}  // namespace sparq
