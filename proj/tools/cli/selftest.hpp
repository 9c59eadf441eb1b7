#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sparq::cli {

struct SelfTestOptions {
  std::uint64_t seed = 20240601;
  /// Test hook: shifts the recombination split's high nibble to the wrong
  /// placement so the recombination suite must fail.
  bool corrupt_placement_table = false;
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::size_t cases = 0;
  std::string detail;  // first failure, if any
  double seconds = 0.0;
};

/// Exhaustive trim bounds, the 65,536-case recombination identity, and
/// engine equivalence on seeded matrices.
std::vector<SuiteResult> run_selftest(const SelfTestOptions& opts = {});

}  // namespace sparq::cli
