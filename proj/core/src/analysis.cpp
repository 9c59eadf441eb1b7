#include "sparq/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace sparq {
namespace {

void check_window(int hi, int lo) {
  if (lo < 0 || hi > 7 || hi < lo) {
    throw std::invalid_argument("bit window must satisfy 0 <= lo <= hi <= 7");
  }
}

}  // namespace

ToggleStats bit_toggle_stats(std::span<const std::uint8_t> x) {
  ToggleStats s;
  s.total = x.size();
  std::array<std::size_t, 8> counts{};
  for (std::uint8_t v : x) {
    if (v == 0) continue;
    ++s.nonzero;
    for (int b = 0; b < 8; ++b) counts[b] += (v >> b) & 1u;
  }
  s.empty = s.nonzero == 0;
  if (!s.empty) {
    for (int b = 0; b < 8; ++b) {
      s.rates[b] = static_cast<double>(counts[b]) / static_cast<double>(s.nonzero);
    }
  }
  return s;
}

double msb_window_probability(const std::array<double, 8>& rates, int hi, int lo) {
  check_window(hi, lo);
  double none = 1.0;
  for (int b = lo; b <= hi; ++b) {
    if (!(rates[b] >= 0.0 && rates[b] <= 1.0)) {
      throw std::invalid_argument("toggle rates must lie in [0, 1]");
    }
    none *= 1.0 - rates[b];
  }
  return 1.0 - none;
}

double msb_window_empirical(std::span<const std::uint8_t> x, int hi, int lo) {
  check_window(hi, lo);
  const unsigned mask = ((1u << (hi + 1)) - 1u) & ~((1u << lo) - 1u);
  std::size_t nonzero = 0, hit = 0;
  for (std::uint8_t v : x) {
    if (v == 0) continue;
    ++nonzero;
    hit += (v & mask) != 0;
  }
  return nonzero ? static_cast<double>(hit) / static_cast<double>(nonzero) : 0.0;
}

double activation_sparsity(std::span<const std::uint8_t> x) noexcept {
  if (x.empty()) return 0.0;
  const auto zeros = std::count(x.begin(), x.end(), std::uint8_t{0});
  return static_cast<double>(zeros) / static_cast<double>(x.size());
}

double pair_zero_fraction(std::span<const std::uint8_t> x, std::size_t row_length) {
  if (x.empty()) return 0.0;
  if (row_length == 0 || x.size() % row_length != 0) {
    throw std::invalid_argument("pair_zero_fraction: row length does not divide the input");
  }
  std::size_t pairs = 0, with_zero = 0;
  for (std::size_t r = 0; r < x.size(); r += row_length) {
    for (std::size_t i = 0; i < row_length; i += 2) {
      const std::uint8_t odd = i + 1 < row_length ? x[r + i + 1] : 0;
      ++pairs;
      with_zero += x[r + i] == 0 || odd == 0;
    }
  }
  return static_cast<double>(with_zero) / static_cast<double>(pairs);
}

ErrorMetrics error_metrics(std::span<const std::int32_t> exact,
                           std::span<const std::int32_t> approx) {
  if (exact.size() != approx.size()) {
    throw std::invalid_argument("error_metrics: size mismatch");
  }
  ErrorMetrics m;
  if (exact.empty()) {
    m.sqnr_db = std::numeric_limits<double>::infinity();
    return m;
  }
  long double err = 0.0L, sig = 0.0L;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const long double e = static_cast<long double>(exact[i]);
    const long double d = e - static_cast<long double>(approx[i]);
    err += d * d;
    sig += e * e;
  }
  const auto n = static_cast<long double>(exact.size());
  m.mse = static_cast<double>(err / n);
  if (err == 0.0L) {
    m.sqnr_db = std::numeric_limits<double>::infinity();
  } else if (sig == 0.0L) {
    m.sqnr_db = -std::numeric_limits<double>::infinity();
  } else {
    m.sqnr_db = static_cast<double>(10.0L * std::log10((sig / n) / (err / n)));
  }
  return m;
}

ErrorMetrics error_metrics(const Tensor<std::int32_t>& exact,
                           const Tensor<std::int32_t>& approx) {
  if (exact.shape != approx.shape) {
    throw std::invalid_argument("error_metrics: shape mismatch " + shape_string(exact.shape) +
                                " vs " + shape_string(approx.shape));
  }
  return error_metrics(std::span(exact.data), std::span(approx.data));
}

int metadata_overhead(const TrimConfig& cfg, bool vsparq) noexcept {
  return cfg.shift_id_bits() + (vsparq ? 1 : 0);
}

int metadata_overhead(const SparqSettings& s) noexcept {
  return s.trim ? metadata_overhead(*s.trim, s.vsparq) : 0;
}

SimReport make_report(const Tensor<std::uint8_t>& a, const Tensor<std::int32_t>& exact,
                      const Tensor<std::int32_t>& approx, const SparqSettings& s,
                      std::string engine) {
  SimReport r;
  r.config = s.descriptor();
  r.trim = s.trim ? s.trim->name() : "exact";
  r.rounding = s.trim && s.rounding;
  r.vsparq = s.trim && s.vsparq;
  r.engine = std::move(engine);
  const auto em = error_metrics(exact, approx);
  r.mse = em.mse;
  r.sqnr_db = em.sqnr_db;
  r.activation_sparsity = activation_sparsity(a.data);
  const std::size_t row = a.rank() == 2 ? a.shape[1] : a.data.size();
  r.pair_zero_fraction = row ? pair_zero_fraction(a.data, row) : 0.0;
  const auto ts = bit_toggle_stats(a.data);
  r.toggle_rates = ts.rates;
  r.toggle_empty = ts.empty;
  r.msb_window_probability = msb_window_probability(ts.rates, 7, 4);
  r.metadata_bits_per_activation = metadata_overhead(s);
  return r;
}

nlohmann::json to_json(const SimReport& r) {
  const auto number_or_inf = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
  };
  nlohmann::json j{{"config", r.config},
                   {"trim", r.trim},
                   {"rounding", r.rounding},
                   {"vsparq", r.vsparq},
                   {"engine", r.engine},
                   {"mse", r.mse},
                   {"sqnr_db", number_or_inf(r.sqnr_db)},
                   {"activation_sparsity", r.activation_sparsity},
                   {"pair_zero_fraction", r.pair_zero_fraction},
                   {"toggle_rates", r.toggle_rates},
                   {"toggle_empty", r.toggle_empty},
                   {"msb_window_probability", r.msb_window_probability},
                   {"metadata_bits_per_activation", r.metadata_bits_per_activation},
                   {"exempt", r.exempt},
                   {"pruned", r.pruned}};
  j["seed"] = r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr);
  return j;
}

Tensor<std::uint8_t> synthetic_activations(const Shape& shape, const SyntheticActivations& params) {
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, params.sigma);
  std::bernoulli_distribution zero(params.zero_fraction);
  Tensor<std::uint8_t> out(shape);
  for (auto& v : out.data) {
    const double mag = std::abs(normal(rng));
    const bool drop = zero(rng);
    v = drop ? 0 : static_cast<std::uint8_t>(std::min(std::round(mag), 255.0));
  }
  return out;
}

Tensor<std::int8_t> synthetic_weights(const Shape& shape, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Tensor<std::int8_t> out(shape);
  for (auto& v : out.data) {
    v = static_cast<std::int8_t>(std::clamp(std::round(normal(rng)), -127.0, 127.0));
  }
  return out;
}

}  // namespace sparq
