#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparq/analysis.hpp"
#include "sparq/datapath.hpp"
#include "sparq/settings.hpp"
#include "sparq/tensor.hpp"

namespace sparq::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kValidationError = 1, kInternalError = 2 };

struct RunConfig {
  SparqSettings settings;
  Engine engine = Engine::Reference;
  std::optional<std::uint64_t> seed;
};

struct MatmulOutcome {
  Tensor<std::int32_t> result;
  Tensor<std::int32_t> exact;  // INT8 result of the same (possibly pruned) operands
  SimReport report;
};

/// Runs one engine and scores it against exact INT8. For the sparse tensor
/// core, `masks` gives the 2:4 pattern of `b`; without it the weights are
/// magnitude-pruned first (report.pruned = true).
MatmulOutcome simulate(const QuantTensor& a, const QuantTensor& b, const RunConfig& run,
                       const std::optional<Tensor<std::uint8_t>>& masks = std::nullopt);

/// Entry point behind `sparq`: quantize | matmul | sweep | analyze | selftest.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sparq::cli
