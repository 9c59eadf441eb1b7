#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cli/selftest.hpp"
#include "sparq/im2col.hpp"
#include "sparq/manifest.hpp"
#include "sparq/npy.hpp"
#include "sparq/quantize.hpp"

namespace sparq::cli {
namespace fs = std::filesystem;
namespace {

struct InputOptions {
  std::string a_path;
  std::string b_path;
  std::string manifest;
  std::string layer;
  std::string synthetic;  // "M,K,N"
  std::string mask_path;
  double sigma = 32.0;
  double sparsity = 0.5;
  std::optional<std::uint64_t> seed;
};

struct Operands {
  QuantTensor a;
  QuantTensor b;
  std::optional<Tensor<std::uint8_t>> masks;
  bool exempt = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void require_parent(const std::string& path) {
  if (path.empty()) return;
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw std::invalid_argument("output directory does not exist: " + parent.string());
  }
}

void write_json(const std::string& path, const nlohmann::json& j, std::ostream& fallback) {
  if (path.empty()) {
    fallback << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

QuantTensor load_activations(const fs::path& p, double scale = 1.0) {
  const auto arr = npy::read(p);
  if (arr.dtype() != npy::DType::U8) {
    throw std::invalid_argument(p.string() + ": activations must be u1 (got " +
                                npy::dtype_name(arr.dtype()) + "); run `sparq quantize` first");
  }
  return QuantTensor::activations(arr.as<std::uint8_t>(), scale);
}

QuantTensor load_weights(const fs::path& p, std::vector<double> scales = {1.0}) {
  const auto arr = npy::read(p);
  if (arr.dtype() != npy::DType::I8) {
    throw std::invalid_argument(p.string() + ": weights must be i1 (got " +
                                npy::dtype_name(arr.dtype()) + "); run `sparq quantize` first");
  }
  return QuantTensor::weights(arr.as<std::int8_t>(), std::move(scales));
}

Operands load_layer(const InputOptions& in) {
  const auto m = Manifest::load(in.manifest);
  const auto [act_e, wgt_e] = m.layer_pair(in.layer);
  const double act_scale = act_e->scale.empty() ? 1.0 : act_e->scale.front();
  const auto act = load_activations(m.resolve(*act_e), act_scale);
  const auto wgt = load_weights(m.resolve(*wgt_e), wgt_e->scale.empty()
                                                       ? std::vector<double>{1.0}
                                                       : wgt_e->scale);
  const bool exempt = act_e->exempt || wgt_e->exempt;
  const auto& ws = wgt.shape();
  if (ws.size() == 4) {
    const std::size_t c_axis = act.rank() == 4 ? 1 : 0;
    if (act.rank() < 3 || act.shape()[c_axis] != ws[1]) {
      throw std::invalid_argument("layer '" + in.layer + "': activation " +
                                  shape_string(act.shape()) + " does not match conv weight " +
                                  shape_string(ws));
    }
    const ConvGeometry g{ws[2], ws[3], static_cast<std::size_t>(wgt_e->stride.value_or(1)),
                         static_cast<std::size_t>(wgt_e->padding.value_or(0))};
    return {im2col(act, g), weight_matrix(wgt), std::nullopt, exempt};
  }
  if (ws.size() == 2) {
    const std::size_t in_features = ws[1];
    const auto& t = act.u8();
    if (t.shape.empty() || t.shape.back() != in_features) {
      throw std::invalid_argument("layer '" + in.layer + "': activation " +
                                  shape_string(t.shape) + " does not match linear weight " +
                                  shape_string(ws));
    }
    Tensor<std::uint8_t> rows({t.data.size() / in_features, in_features}, t.data);
    return {QuantTensor::activations(std::move(rows), act_scale), weight_matrix(wgt),
            std::nullopt, exempt};
  }
  throw std::invalid_argument("layer '" + in.layer + "': unsupported weight rank " +
                              std::to_string(ws.size()));
}

Operands load_operands(InputOptions& in) {
  const int modes = !in.a_path.empty() + !in.manifest.empty() + !in.synthetic.empty();
  if (modes != 1) {
    throw std::invalid_argument("give exactly one of --a/--b, --manifest/--layer or --synthetic");
  }
  std::optional<Tensor<std::uint8_t>> masks;
  if (!in.mask_path.empty()) masks = npy::read(in.mask_path).as<std::uint8_t>();

  if (!in.synthetic.empty()) {
    const auto dims = split(in.synthetic, ',');
    if (dims.size() != 3) throw std::invalid_argument("--synthetic expects M,K,N");
    std::size_t m = 0, k = 0, n = 0;
    try {
      m = std::stoull(dims[0]);
      k = std::stoull(dims[1]);
      n = std::stoull(dims[2]);
    } catch (const std::exception&) {
      throw std::invalid_argument("--synthetic expects three integers M,K,N");
    }
    if (!in.seed) in.seed = 0;
    auto a = synthetic_activations({m, k}, {in.sigma, in.sparsity, *in.seed});
    auto b = synthetic_weights({k, n}, in.sigma, *in.seed + 1);
    return {QuantTensor::activations(std::move(a)), QuantTensor::weights(std::move(b)),
            std::move(masks), false};
  }
  if (!in.manifest.empty()) {
    if (in.layer.empty()) throw std::invalid_argument("--manifest requires --layer");
    auto ops = load_layer(in);
    ops.masks = std::move(masks);
    return ops;
  }
  if (in.b_path.empty()) throw std::invalid_argument("--a requires --b");
  return {load_activations(in.a_path), load_weights(in.b_path), std::move(masks), false};
}

void add_input_options(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--a", in.a_path, "Activation matrix [M x K], u1 .npy");
  cmd->add_option("--b", in.b_path, "Weight matrix [K x N], i1 .npy");
  cmd->add_option("--manifest", in.manifest, "Manifest of quantized tensors");
  cmd->add_option("--layer", in.layer, "Layer id to run from --manifest");
  cmd->add_option("--synthetic", in.synthetic,
                  "Seeded half-Gaussian activations and Gaussian weights, M,K,N");
  cmd->add_option("--sigma", in.sigma, "Standard deviation for --synthetic")->capture_default_str();
  cmd->add_option("--sparsity", in.sparsity, "Zero fraction for --synthetic activations")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", in.seed, "Seed for synthetic inputs (recorded in the report)");
  cmd->add_option("--mask", in.mask_path, "2:4 masks [K/4 x N], u1 .npy (engine stc)");
}

std::string format_double(double v, int precision = 4) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

// --- subcommands -----------------------------------------------------------

struct QuantizeArgs {
  std::string manifest;
  std::string out_dir;
};

int cmd_quantize(const QuantizeArgs& args, std::ostream& out) {
  auto m = Manifest::load(args.manifest);
  struct Pending {
    fs::path file;
    npy::Array array;
  };
  std::vector<Pending> pending;
  Manifest result{m.model, {}, args.out_dir};

  for (const auto& e : m.entries) {
    const auto arr = npy::read(m.resolve(e));
    if (arr.shape != e.shape) {
      throw std::invalid_argument("entry '" + e.name + "': file shape " +
                                  shape_string(arr.shape) + " differs from manifest " +
                                  shape_string(e.shape));
    }
    ManifestEntry q = e;
    q.path = e.name + ".npy";
    if (e.role == TensorRole::Activation) {
      if (arr.dtype() == npy::DType::F32) {
        const auto t = arr.as<float>();
        double max_abs = e.max_abs.value_or(0.0);
        if (!e.max_abs) {
          for (float v : t.data) max_abs = std::max(max_abs, static_cast<double>(v));
          if (max_abs == 0.0) max_abs = 1.0;
        }
        const auto qt = quantize_activations(t, max_abs);
        q.scale = qt.scales();
        q.max_abs = max_abs;
        pending.push_back({fs::path(args.out_dir) / q.path, npy::from_tensor(qt.u8())});
      } else if (arr.dtype() == npy::DType::U8) {
        pending.push_back({fs::path(args.out_dir) / q.path, arr});
      } else {
        throw std::invalid_argument("entry '" + e.name + "': activation dtype must be f4 or u1");
      }
    } else {
      if (arr.dtype() == npy::DType::F32) {
        const auto qt = quantize_weights_per_kernel(arr.as<float>());
        q.scale = qt.scales();
        pending.push_back({fs::path(args.out_dir) / q.path, npy::from_tensor(qt.i8())});
      } else if (arr.dtype() == npy::DType::I8) {
        pending.push_back({fs::path(args.out_dir) / q.path, arr});
      } else {
        throw std::invalid_argument("entry '" + e.name + "': weight dtype must be f4 or i1");
      }
    }
    result.entries.push_back(std::move(q));
  }

  fs::create_directories(args.out_dir);
  for (const auto& p : pending) npy::write(p.file, p.array);
  const auto manifest_out = fs::path(args.out_dir) / "manifest.json";
  result.save(manifest_out);
  out << "quantized " << pending.size() << " tensors -> " << manifest_out.string() << '\n';
  return kOk;
}

struct MatmulArgs {
  InputOptions in;
  std::string config = "5opt";
  bool rounding = true;
  bool vsparq = true;
  std::string engine = "ref";
  std::string out;
  std::string fp_out;
  std::string report;
};

int cmd_matmul(MatmulArgs& args, std::ostream& out) {
  require_parent(args.out);
  require_parent(args.fp_out);
  require_parent(args.report);
  RunConfig run{SparqSettings::parse(args.config, args.rounding, args.vsparq),
                parse_engine(args.engine), std::nullopt};
  auto ops = load_operands(args.in);
  run.seed = args.in.seed;
  if (ops.exempt) run.settings = SparqSettings{};
  auto outcome = simulate(ops.a, ops.b, run, ops.masks);
  outcome.report.exempt = ops.exempt;

  std::optional<Tensor<float>> fp;
  if (!args.fp_out.empty()) {
    fp = dequantize_output(outcome.result, ops.a.scales().front(), ops.b.scales(),
                           outcome.result.rank() - 1);
  }
  if (!args.out.empty()) npy::write(args.out, outcome.result);
  if (fp) npy::write(args.fp_out, *fp);
  write_json(args.report, to_json(outcome.report), out);
  return kOk;
}

struct SweepArgs {
  InputOptions in;
  std::string configs;
  bool rounding = true;
  bool vsparq = true;
  std::string engine = "ref";
  std::string report;
};

int cmd_sweep(SweepArgs& args, std::ostream& out) {
  require_parent(args.report);
  const auto tokens = split(args.configs, ',');
  if (tokens.empty()) throw std::invalid_argument("--configs: empty config list");
  std::vector<SparqSettings> grid;
  for (const auto& t : tokens) grid.push_back(SparqSettings::parse(t, args.rounding, args.vsparq));
  const Engine engine = parse_engine(args.engine);
  auto ops = load_operands(args.in);

  nlohmann::json rows = nlohmann::json::array();
  std::vector<SimReport> reports;
  for (const auto& s : grid) {
    RunConfig run{ops.exempt ? SparqSettings{} : s, engine, args.in.seed};
    auto outcome = simulate(ops.a, ops.b, run, ops.masks);
    outcome.report.exempt = ops.exempt;
    rows.push_back(to_json(outcome.report));
    reports.push_back(std::move(outcome.report));
  }

  out << std::left << std::setw(14) << "config" << std::right << std::setw(16) << "mse"
      << std::setw(12) << "sqnr_db" << std::setw(11) << "meta_bits" << '\n';
  for (const auto& r : reports) {
    out << std::left << std::setw(14) << r.config << std::right << std::setw(16)
        << format_double(r.mse) << std::setw(12) << format_double(r.sqnr_db, 2) << std::setw(11)
        << r.metadata_bits_per_activation << '\n';
  }
  if (!args.report.empty()) {
    nlohmann::json j{{"engine", args.engine}, {"rows", rows}};
    j["seed"] = args.in.seed ? nlohmann::json(*args.in.seed) : nlohmann::json(nullptr);
    write_json(args.report, j, out);
  }
  return kOk;
}

struct AnalyzeArgs {
  std::string input;
  std::string config;
  bool vsparq = true;
  std::string report;
};

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out) {
  require_parent(args.report);
  const auto t = npy::read(args.input).as<std::uint8_t>();
  const auto stats = bit_toggle_stats(t.data);
  const std::size_t row = t.shape.empty() ? t.data.size() : t.shape.back();
  nlohmann::json j{{"input", args.input},
                   {"shape", t.shape},
                   {"elements", stats.total},
                   {"nonzero", stats.nonzero},
                   {"activation_sparsity", activation_sparsity(t.data)},
                   {"pair_zero_fraction", row ? pair_zero_fraction(t.data, row) : 0.0},
                   {"toggle_rates", stats.rates},
                   {"toggle_empty", stats.empty},
                   {"msb_window_probability", msb_window_probability(stats.rates, 7, 4)},
                   {"msb_window_empirical", msb_window_empirical(t.data, 7, 4)}};
  if (!args.config.empty()) {
    const auto s = SparqSettings::parse(args.config, true, args.vsparq);
    j["config"] = s.descriptor();
    j["metadata_bits_per_activation"] = metadata_overhead(s);
  }
  write_json(args.report, j, out);
  return kOk;
}

int cmd_selftest(const SelfTestOptions& opts, std::ostream& out) {
  const auto results = run_selftest(opts);
  bool ok = true;
  double total = 0.0;
  for (const auto& r : results) {
    ok = ok && r.passed;
    total += r.seconds;
    out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(20) << r.name << std::right
        << std::setw(8) << r.cases << " cases  " << format_double(r.seconds, 3) << " s";
    if (!r.passed) out << "  " << r.detail;
    out << '\n';
  }
  out << (ok ? "selftest passed" : "selftest FAILED") << " in " << format_double(total, 3)
      << " s\n";
  return ok ? kOk : kInternalError;
}

}  // namespace

MatmulOutcome simulate(const QuantTensor& a, const QuantTensor& b, const RunConfig& run,
                       const std::optional<Tensor<std::uint8_t>>& masks) {
  const SparqSettings& s = run.settings;
  const SparqSettings exact{};
  MatmulOutcome o;
  bool pruned = false;
  switch (run.engine) {
    case Engine::Reference:
      o.result = reference_matmul(a, b, s);
      o.exact = reference_matmul(a, b, exact);
      break;
    case Engine::Systolic:
      o.result = sa_matmul(a, b, s);
      o.exact = reference_matmul(a, b, exact);
      break;
    case Engine::TensorCore:
      o.result = tc_matmul(a, b, s);
      o.exact = reference_matmul(a, b, exact);
      break;
    case Engine::SparseTensorCore:
      if (masks) {
        o.result = stc_matmul(a, b, *masks, s);
        o.exact = reference_matmul(a, b, exact);
      } else {
        const auto p = make_24_mask(b, 0);
        o.result = stc_matmul(a, p.weights, p.masks, s);
        o.exact = reference_matmul(a, p.weights, exact);
        pruned = true;
      }
      break;
  }
  o.report = make_report(a.u8(), o.exact, o.result, s, engine_name(run.engine));
  o.report.seed = run.seed;
  o.report.pruned = pruned;
  return o;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SPARQ sparsity-aware quantization simulator", "sparq"};
  app.require_subcommand(1);

  QuantizeArgs qa;
  auto* quantize = app.add_subcommand("quantize", "Quantize FP32 tensors listed in a manifest");
  quantize->add_option("--manifest", qa.manifest, "Input manifest JSON")->required();
  quantize->add_option("--out", qa.out_dir, "Output directory")->required();

  MatmulArgs ma;
  auto* matmul = app.add_subcommand("matmul", "Run one engine and report error statistics");
  add_input_options(matmul, ma.in);
  matmul->add_option("--config", ma.config, "5opt|3opt|2opt|6opt|7opt|exact, optional +R/-R/-vS")
      ->capture_default_str();
  matmul->add_flag("--rounding,!--no-rounding", ma.rounding, "Round within the window");
  matmul->add_flag("--vsparq,!--no-vsparq", ma.vsparq, "Zero-aware activation pairing");
  matmul->add_option("--engine", ma.engine, "ref|sa|tc|stc")->capture_default_str();
  matmul->add_option("--out", ma.out, "Result .npy (i4)");
  matmul->add_option("--fp-out", ma.fp_out, "Dequantized result .npy (f4)");
  matmul->add_option("--report", ma.report, "Report JSON (stdout if omitted)");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Compare several configs on the same operands");
  add_input_options(sweep, sa.in);
  sweep->add_option("--configs", sa.configs, "Comma-separated, e.g. 5opt+R,3opt-R,2opt+R-vS")
      ->required();
  sweep->add_flag("--rounding,!--no-rounding", sa.rounding, "Default rounding for bare names");
  sweep->add_flag("--vsparq,!--no-vsparq", sa.vsparq, "Default pairing for bare names");
  sweep->add_option("--engine", sa.engine, "ref|sa|tc|stc")->capture_default_str();
  sweep->add_option("--report", sa.report, "Comparison JSON");

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Bit-toggle and sparsity statistics of activations");
  analyze->add_option("--input", aa.input, "Activation .npy (u1)")->required();
  analyze->add_option("--config", aa.config, "Also report metadata bits for this config");
  analyze->add_flag("--vsparq,!--no-vsparq", aa.vsparq, "Count the MuxCtrl bit");
  analyze->add_option("--report", aa.report, "Report JSON (stdout if omitted)");

  SelfTestOptions so;
  auto* selftest = app.add_subcommand("selftest", "Run the exhaustive self-checks");
  selftest->add_option("--seed", so.seed, "Seed for the engine-equivalence matrices");
  selftest->add_flag("--corrupt-placement-table", so.corrupt_placement_table)
      ->group("");  // test hook, hidden from --help

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "sparq: " << e.what() << '\n';
    return kValidationError;
  }

  try {
    if (*quantize) return cmd_quantize(qa, out);
    if (*matmul) return cmd_matmul(ma, out);
    if (*sweep) return cmd_sweep(sa, out);
    if (*analyze) return cmd_analyze(aa, out);
    if (*selftest) return cmd_selftest(so, out);
  } catch (const std::invalid_argument& e) {
    err << "sparq: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::overflow_error& e) {
    err << "sparq: internal error: " << e.what() << '\n';
    return kInternalError;
  } catch (const std::runtime_error& e) {
    err << "sparq: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    err << "sparq: internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kValidationError;
}

}  // namespace sparq::cli
