#include "cli/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <set>
#include <sstream>

#include "sparq/analysis.hpp"
#include "sparq/bitquant.hpp"
#include "sparq/datapath.hpp"
#include "sparq/vsparq.hpp"

namespace sparq::cli {
namespace {

using Clock = std::chrono::steady_clock;

// Every value a (bits, placements) window can reconstruct.
std::vector<unsigned> representable(int bits, std::span<const int> placements) {
  std::set<unsigned> values;
  for (int p : placements) {
    for (unsigned m = 0; m < (1u << bits); ++m) values.insert(m << p);
  }
  return {values.begin(), values.end()};
}

unsigned nearest(const std::vector<unsigned>& reps, unsigned x, bool rounding) {
  auto above = std::lower_bound(reps.begin(), reps.end(), x);
  if (above != reps.end() && *above == x) return x;
  const unsigned below = *std::prev(above);
  if (!rounding || above == reps.end()) return below;
  return (x - below) < (*above - x) ? below : *above;  // ties go up
}

SuiteResult trim_bounds_suite() {
  SuiteResult r{"trim-bounds"};
  std::ostringstream why;
  for (const auto& name : TrimConfig::names()) {
    const auto cfg = TrimConfig::named(name);
    const auto reps = representable(cfg.bits(), cfg.placements());
    for (bool rounding : {false, true}) {
      for (unsigned x = 0; x < 256; ++x, ++r.cases) {
        const auto t = trim(static_cast<std::uint8_t>(x), cfg, rounding);
        const unsigned got = dequant(t);
        const unsigned want = nearest(reps, x, rounding);
        const long err = static_cast<long>(x) - static_cast<long>(got);
        bool ok = got == want && t.mantissa < (1u << cfg.bits()) && cfg.has_placement(t.shift);
        if (!rounding) {
          ok = ok && err >= 0 && err <= (1L << t.shift) - 1;
        } else if (!t.saturated) {
          ok = ok && std::labs(err) <= (t.shift ? (1L << (t.shift - 1)) : 0);
        } else {
          ok = ok && err <= (1L << t.shift) - 1;
        }
        if (!ok && r.detail.empty()) {
          why << name << (rounding ? "+R" : "-R") << " x=" << x << " got " << got << " want "
              << want;
          r.detail = why.str();
        }
      }
    }
  }
  r.passed = r.detail.empty();
  return r;
}

SuiteResult recombination_suite(const SelfTestOptions& opts) {
  SuiteResult r{"recombination"};
  const std::vector<int> table =
      opts.corrupt_placement_table ? std::vector<int>{3, 0} : std::vector<int>{4, 0};
  const DualMultiplier mult(4, table);
  for (int x = 0; x < 256; ++x) {
    for (int w = -128; w < 128; ++w, ++r.cases) {
      const DualMultInput in{static_cast<std::uint16_t>(x >> 4),
                             static_cast<std::uint16_t>(x & 0xF),
                             static_cast<std::int8_t>(w),
                             static_cast<std::int8_t>(w),
                             table[0],
                             table[1],
                             WeightSelect::Both};
      const std::int32_t got = mult(in);
      if (got != x * w && r.detail.empty()) {
        r.detail = "x=" + std::to_string(x) + " w=" + std::to_string(w) + " got " +
                   std::to_string(got) + " want " + std::to_string(x * w);
      }
    }
  }
  r.passed = r.detail.empty();
  return r;
}

// Per-column reference for the sparse tensor core: gather the kept
// positions and run the reference dot product on the compacted operands.
std::int64_t stc_reference(const Tensor<std::uint8_t>& a, const Tensor<std::int8_t>& b,
                           const Tensor<std::uint8_t>& masks, std::size_t i, std::size_t j,
                           const SparqSettings& s) {
  const std::size_t k = a.shape[1], n = b.shape[1];
  std::vector<std::uint8_t> xs;
  std::vector<std::int8_t> ws;
  for (std::size_t g = 0; g < k / 4; ++g) {
    for (std::size_t l = 0; l < 4; ++l) {
      if (masks.data[g * n + j] & (1u << l)) {
        xs.push_back(a.data[i * k + 4 * g + l]);
        ws.push_back(b.data[(4 * g + l) * n + j]);
      }
    }
  }
  return s.trim ? dot_product(xs, ws, *s.trim, s.rounding, s.vsparq) : exact_dot_product(xs, ws);
}

SuiteResult engine_suite(const SelfTestOptions& opts) {
  SuiteResult r{"engine-equivalence"};
  std::vector<SparqSettings> grid{SparqSettings{}};
  for (const auto& name : TrimConfig::names()) {
    for (bool rounding : {false, true}) {
      for (bool vs : {false, true}) grid.push_back({TrimConfig::named(name), rounding, vs});
    }
  }
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> dim(1, 16);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = dim(rng), k = 4 * (1 + dim(rng) % 4), n = dim(rng);
    const auto a = QuantTensor::activations(
        synthetic_activations({m, k}, {40.0, 0.5, rng()}));
    const auto b = QuantTensor::weights(synthetic_weights({k, n}, 40.0, rng()));
    const auto pruned = make_24_mask(b, 0);
    for (const auto& s : grid) {
      ++r.cases;
      const auto ref = reference_matmul(a, b, s);
      const bool same = sa_matmul(a, b, s, {4, 4}) == ref && tc_matmul(a, b, s) == ref;
      const auto stc = stc_matmul(a, pruned.weights, pruned.masks, s);
      bool stc_ok = true;
      for (std::size_t i = 0; i < m && stc_ok; ++i) {
        for (std::size_t j = 0; j < n && stc_ok; ++j) {
          stc_ok = stc.data[i * n + j] ==
                   stc_reference(a.u8(), pruned.weights.i8(), pruned.masks, i, j, s);
        }
      }
      if ((!same || !stc_ok) && r.detail.empty()) {
        r.detail = s.descriptor() + " trial " + std::to_string(trial) +
                   (same ? ": stc differs from compacted reference" : ": engines differ");
      }
    }
  }
  r.passed = r.detail.empty();
  return r;
}

template <typename Fn>
SuiteResult timed(const char* name, Fn&& fn) {
  const auto t0 = Clock::now();
  SuiteResult r{name};
  try {
    r = fn();
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

}  // namespace

std::vector<SuiteResult> run_selftest(const SelfTestOptions& opts) {
  std::vector<SuiteResult> out;
  out.push_back(timed("trim-bounds", [] { return trim_bounds_suite(); }));
  out.push_back(timed("recombination", [&] { return recombination_suite(opts); }));
  out.push_back(timed("engine-equivalence", [&] { return engine_suite(opts); }));
  return out;
}

}  // namespace sparq::cli
