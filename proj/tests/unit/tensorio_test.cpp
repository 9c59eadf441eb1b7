#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "printers.hpp"
#include "sparq/analysis.hpp"
#include "sparq/datapath.hpp"
#include "sparq/im2col.hpp"
#include "sparq/manifest.hpp"
#include "sparq/npy.hpp"
#include "sparq/quantize.hpp"
#include "temp_dir.hpp"

namespace sparq {
namespace {

using testing::TempDir;

std::vector<std::byte> bytes_of(const std::string& header, const std::string& payload,
                                int major = 1) {
  std::string raw = "\x93NUMPY";
  raw.push_back(static_cast<char>(major));
  raw.push_back('\0');
  const std::size_t len = header.size();
  raw.push_back(static_cast<char>(len & 0xFF));
  raw.push_back(static_cast<char>((len >> 8) & 0xFF));
  if (major >= 2) {
    raw.push_back('\0');
    raw.push_back('\0');
  }
  raw += header + payload;
  const auto* p = reinterpret_cast<const std::byte*>(raw.data());
  return {p, p + raw.size()};
}

// --- QuantTensor -----------------------------------------------------------

TEST(QuantTensor, Validation) {
  EXPECT_THROW(QuantTensor::activations(Tensor<std::uint8_t>({2}), 0.0), std::invalid_argument);
  EXPECT_THROW(QuantTensor::weights(Tensor<std::int8_t>({3, 2}), {1.0, 2.0}),
               std::invalid_argument);
  EXPECT_NO_THROW(QuantTensor::weights(Tensor<std::int8_t>({3, 2}), {1.0, 2.0}, 1));
  EXPECT_THROW(QuantTensor::weights(Tensor<std::int8_t>({3, 2}), {1.0}, 2), std::invalid_argument);
  EXPECT_THROW((Tensor<std::uint8_t>({2, 2}, {1, 2, 3})), std::invalid_argument);

  const auto a = QuantTensor::activations(Tensor<std::uint8_t>({2}));
  EXPECT_FALSE(a.is_signed());
  EXPECT_THROW(a.i8(), std::invalid_argument);
  EXPECT_NO_THROW(QuantTensor::weights(Tensor<std::int8_t>({1}, {-128})));
}

// --- quantization ------------------------------------------------------------

TEST(QuantizeActivations, Examples) {
  const double max_abs = 6.0;
  const auto q = quantize_activations(Tensor<float>({3}, {0.0f, 6.0f, 3.0f}), max_abs);
  EXPECT_EQ(q.u8().data, (std::vector<std::uint8_t>{0, 255, 128}));
  EXPECT_DOUBLE_EQ(q.scales().front(), 6.0 / 255.0);

  const auto z = quantize_activations(Tensor<float>({4}), 1.0);
  EXPECT_EQ(z.u8().data, std::vector<std::uint8_t>(4, 0));
}

TEST(QuantizeActivations, Errors) {
  try {
    quantize_activations(Tensor<float>({2}, {1.0f, -0.5f}), 1.0);
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("unsigned activation violation"), std::string::npos);
  }
  EXPECT_THROW(quantize_activations(Tensor<float>({1}, {1.0f}), 0.0), std::invalid_argument);
}

TEST(QuantizeWeights, Examples) {
  const auto q = quantize_weights_per_kernel(Tensor<float>({1, 2}, {-2.0f, 1.0f}));
  EXPECT_EQ(q.i8().data, (std::vector<std::int8_t>{-127, 64}));
  EXPECT_DOUBLE_EQ(q.scales().front(), 2.0 / 127.0);

  const auto z = quantize_weights_per_kernel(Tensor<float>({2, 2}, {0, 0, 1, -1}));
  EXPECT_EQ(z.i8().data, (std::vector<std::int8_t>{0, 0, 127, -127}));
  EXPECT_DOUBLE_EQ(z.scales()[0], 1.0);
}

TEST(QuantizeWeights, PerKernelScaleIndependence) {
  const std::vector<float> k{0.3f, -1.7f, 0.9f, 2.2f};
  std::vector<float> both(k);
  for (float v : k) both.push_back(v * 10.0f);
  const auto q = quantize_weights_per_kernel(Tensor<float>({2, 4}, both));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(q.i8().data[i], q.i8().data[4 + i]);
  EXPECT_NEAR(q.scales()[1] / q.scales()[0], 10.0, 1e-6);
}

TEST(QuantizeProperty, RoundTripWithinHalfStep) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<float> act(0.0f, 4.0f), wt(-3.0f, 3.0f);
  Tensor<float> a({500});
  for (auto& v : a.data) v = act(rng);
  const double max_abs = 4.0;
  const auto qa = quantize_activations(a, max_abs);
  const double sa = qa.scales().front();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_LE(std::abs(qa.u8().data[i] * sa - a.data[i]), sa / 2 + 1e-6);
  }

  Tensor<float> w({5, 100});
  for (auto& v : w.data) v = wt(rng);
  const auto qw = quantize_weights_per_kernel(w);
  for (std::size_t o = 0; o < 5; ++o) {
    const double s = qw.scales()[o];
    for (std::size_t i = 0; i < 100; ++i) {
      EXPECT_LE(std::abs(qw.i8().data[o * 100 + i] * s - w.data[o * 100 + i]), s / 2 + 1e-6);
    }
  }
}

TEST(DequantizeOutput, Examples) {
  const double ws[] = {0.1};
  const auto y = dequantize_output(Tensor<std::int32_t>({1}, {100}), 0.5, ws);
  EXPECT_NEAR(y.data[0], 5.0f, 1e-6);

  const auto z = dequantize_output(Tensor<std::int32_t>({2, 2}), 0.5, ws);
  EXPECT_EQ(z.data, std::vector<float>(4, 0.0f));

  const double per[] = {1.0, 2.0, 4.0};
  const auto m = dequantize_output(Tensor<std::int32_t>({2, 3}, {1, 1, 1, 2, 2, 2}), 1.0, per, 1);
  EXPECT_EQ(m.data, (std::vector<float>{1, 2, 4, 2, 4, 8}));
  EXPECT_THROW(dequantize_output(Tensor<std::int32_t>({2, 3}), 1.0, per, 0),
               std::invalid_argument);
}

// --- npy ---------------------------------------------------------------------

TEST(Npy, EncodesVersionOneHeader) {
  const auto bytes = npy::encode(npy::from_tensor(Tensor<std::uint8_t>({2, 3}, {1, 2, 3, 4, 5, 6})));
  ASSERT_GE(bytes.size(), 10u);
  EXPECT_EQ(std::memcmp(bytes.data(), "\x93NUMPY\x01\x00", 8), 0);
  const std::size_t header_len = static_cast<std::size_t>(bytes[8]) |
                                 (static_cast<std::size_t>(bytes[9]) << 8);
  EXPECT_EQ((10 + header_len) % 64, 0u);
  const std::string header(reinterpret_cast<const char*>(bytes.data() + 10), header_len);
  EXPECT_EQ(header.rfind("{'descr': '|u1', 'fortran_order': False, 'shape': (2, 3), }", 0), 0u);
  EXPECT_EQ(header.back(), '\n');
  EXPECT_EQ(bytes.size(), 10 + header_len + 6);
}

TEST(Npy, RoundTripsEveryDtype) {
  TempDir dir;
  const Tensor<std::uint8_t> u({3}, {0, 128, 255});
  const Tensor<std::int8_t> i({2, 2}, {-128, -1, 0, 127});
  const Tensor<std::int32_t> l({2}, {-2147483647, 42});
  const Tensor<float> f({1, 1, 2}, {-0.5f, 3.25f});
  npy::write(dir / "u.npy", u);
  npy::write(dir / "i.npy", i);
  npy::write(dir / "l.npy", l);
  npy::write(dir / "f.npy", f);
  EXPECT_EQ(npy::read(dir / "u.npy").as<std::uint8_t>(), u);
  EXPECT_EQ(npy::read(dir / "i.npy").as<std::int8_t>(), i);
  EXPECT_EQ(npy::read(dir / "l.npy").as<std::int32_t>(), l);
  EXPECT_EQ(npy::read(dir / "f.npy").as<float>(), f);
  EXPECT_THROW(npy::read(dir / "u.npy").as<float>(), std::invalid_argument);
  EXPECT_EQ(npy::read(dir / "f.npy").dtype(), npy::DType::F32);
}

TEST(Npy, DecodesScalarsAndVersionTwo) {
  const auto scalar =
      npy::decode(bytes_of("{'descr': '<i4', 'fortran_order': False, 'shape': (), }\n",
                           std::string("\x07\x00\x00\x00", 4)));
  EXPECT_TRUE(scalar.shape.empty());
  EXPECT_EQ(std::get<std::vector<std::int32_t>>(scalar.data), (std::vector<std::int32_t>{7}));

  const auto v2 = npy::decode(
      bytes_of("{'descr': '|i1', 'fortran_order': False, 'shape': (2,), }\n", "\xff\x01", 2));
  EXPECT_EQ(v2.as<std::int8_t>().data, (std::vector<std::int8_t>{-1, 1}));
}

TEST(Npy, RejectsMalformedInput) {
  const std::string ok = "{'descr': '|u1', 'fortran_order': False, 'shape': (2,), }\n";
  EXPECT_THROW(npy::decode(bytes_of(ok, "\x01")), std::runtime_error);  // truncated data
  EXPECT_THROW(
      npy::decode(bytes_of("{'descr': '|u1', 'fortran_order': True, 'shape': (2,), }\n", "ab")),
      std::runtime_error);
  EXPECT_THROW(
      npy::decode(bytes_of("{'descr': '>i4', 'fortran_order': False, 'shape': (1,), }\n", "abcd")),
      std::runtime_error);
  EXPECT_THROW(
      npy::decode(bytes_of("{'descr': '<f8', 'fortran_order': False, 'shape': (1,), }\n",
                           "abcdefgh")),
      std::runtime_error);
  EXPECT_THROW(npy::decode(bytes_of("{'descr': '|u1', 'shape': (2,), }\n", "ab")),
               std::runtime_error);
  EXPECT_THROW(npy::decode(bytes_of(ok, "ab", 9)), std::runtime_error);
  const std::vector<std::byte> junk(16, std::byte{0x20});
  EXPECT_THROW(npy::decode(junk), std::runtime_error);
  EXPECT_THROW(npy::read("/nonexistent/sparq.npy"), std::runtime_error);
}

// --- manifest ------------------------------------------------------------------

TEST(Manifest, ParsesAndRoundTrips) {
  const auto j = nlohmann::json::parse(R"({
    "model": "toy",
    "entries": [
      {"name": "conv1.in", "path": "a.npy", "role": "activation", "layer": 0,
       "shape": [1, 3, 8, 8], "max_abs": 4.5, "exempt": true},
      {"name": "conv1.w", "path": "w.npy", "role": "weight", "layer": 0,
       "shape": [4, 3, 3, 3], "scale": [0.1, 0.2, 0.3, 0.4], "stride": 2, "padding": 1},
      {"name": "fc.in", "path": "sub/x.npy", "role": "activation", "layer": "fc",
       "shape": [2, 16], "scale": 0.05}
    ]})");
  const auto m = Manifest::from_json(j, "/data");
  EXPECT_EQ(m.model, "toy");
  ASSERT_EQ(m.entries.size(), 3u);
  EXPECT_TRUE(m.entries[0].exempt);
  EXPECT_EQ(m.entries[0].max_abs, 4.5);
  EXPECT_EQ(m.entries[1].role, TensorRole::Weight);
  EXPECT_EQ(m.entries[1].scale.size(), 4u);
  EXPECT_EQ(m.entries[1].stride, 2);
  EXPECT_EQ(m.entries[2].scale, std::vector<double>{0.05});
  EXPECT_EQ(m.resolve(m.entries[2]), std::filesystem::path("/data/sub/x.npy"));
  EXPECT_EQ(m.layers(), (std::vector<std::string>{"0", "fc"}));

  const auto [act, wgt] = m.layer_pair("0");
  ASSERT_NE(act, nullptr);
  ASSERT_NE(wgt, nullptr);
  EXPECT_EQ(act->name, "conv1.in");
  EXPECT_EQ(wgt->name, "conv1.w");
  EXPECT_EQ(m.find("fc.in"), &m.entries[2]);
  EXPECT_EQ(m.find("nope"), nullptr);

  EXPECT_EQ(Manifest::from_json(m.to_json()).to_json(), m.to_json());
  EXPECT_EQ(m.to_json()["entries"][0]["layer"], 0);
}

TEST(Manifest, RejectsBadDocuments) {
  const auto parse = [](const char* text) { return Manifest::from_json(nlohmann::json::parse(text)); };
  EXPECT_THROW(parse(R"({"model": "x"})"), std::invalid_argument);
  EXPECT_THROW(parse(R"({"entries": [{"name": "a", "path": "a", "role": "activation",
                                      "layer": 0}]})"),
               std::invalid_argument);
  EXPECT_THROW(parse(R"({"entries": [{"name": "a", "path": "a", "role": "bias",
                                      "layer": 0, "shape": [1]}]})"),
               std::invalid_argument);
  EXPECT_THROW(parse(R"({"entries": [{"name": "a", "path": "a", "role": "weight",
                                      "layer": 0, "shape": [1]},
                                     {"name": "a", "path": "b", "role": "weight",
                                      "layer": 1, "shape": [1]}]})"),
               std::invalid_argument);
  EXPECT_THROW(parse(R"({"entries": [{"name": "a", "path": "a", "role": "weight",
                                      "layer": 0, "shape": "big"}]})"),
               std::invalid_argument);
}

TEST(Manifest, LoadChecksReferencedFiles) {
  TempDir dir;
  npy::write(dir / "a.npy", Tensor<std::uint8_t>({1}, {1}));
  Manifest m;
  m.model = "m";
  m.entries.push_back({"a", "a.npy", TensorRole::Activation, "0", true, {1}});
  m.save(dir / "manifest.json");
  const auto loaded = Manifest::load(dir / "manifest.json");
  EXPECT_EQ(loaded.base_dir, dir.path());
  EXPECT_EQ(loaded.to_json(), m.to_json());

  m.entries.push_back({"b", "missing.npy", TensorRole::Weight, "0", true, {1}});
  m.save(dir / "broken.json");
  EXPECT_THROW(Manifest::load(dir / "broken.json"), std::invalid_argument);
  EXPECT_THROW(Manifest::load(dir / "absent.json"), std::invalid_argument);
}

// --- im2col ------------------------------------------------------------------

TEST(Im2col, Examples) {
  const auto x = QuantTensor::activations(Tensor<std::uint8_t>({1, 2, 2}, {1, 2, 3, 4}));
  const auto cols = im2col(x, {2, 2, 1, 0});
  EXPECT_EQ(cols.u8(), Tensor<std::uint8_t>({1, 4}, {1, 2, 3, 4}));

  const auto y = QuantTensor::activations(Tensor<std::uint8_t>({2, 2, 3}, {1, 2, 3, 4, 5, 6,  //
                                                                           7, 8, 9, 10, 11, 12}),
                                          0.25);
  const auto one = im2col(y, {1, 1, 1, 0});
  EXPECT_EQ(one.shape(), (Shape{6, 2}));
  EXPECT_EQ(one.u8().data, (std::vector<std::uint8_t>{1, 7, 2, 8, 3, 9, 4, 10, 5, 11, 6, 12}));
  EXPECT_EQ(one.scales().front(), 0.25);
}

TEST(Im2col, Errors) {
  const auto x = QuantTensor::activations(Tensor<std::uint8_t>({1, 2, 2}));
  EXPECT_THROW(im2col(x, {3, 3, 1, 0}), std::invalid_argument);
  EXPECT_THROW(im2col(x, {1, 1, 0, 0}), std::invalid_argument);
  EXPECT_THROW(im2col(QuantTensor::activations(Tensor<std::uint8_t>({4})), {1, 1, 1, 0}),
               std::invalid_argument);
  EXPECT_NO_THROW(im2col(x, {3, 3, 1, 1}));
  EXPECT_THROW(weight_matrix(QuantTensor::weights(Tensor<std::int8_t>({2, 2, 2}))),
               std::invalid_argument);
}

TEST(Im2colProperty, MatchesDirectConvolution) {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<int> small(1, 8), kern(1, 3), str(1, 2), pad(0, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const int c = small(rng), h = small(rng), w = small(rng), o = small(rng);
    const int kh = std::min(kern(rng), h), kw = std::min(kern(rng), w);
    const int stride = str(rng), padding = pad(rng);
    const auto x = synthetic_activations({std::size_t(c), std::size_t(h), std::size_t(w)},
                                         {60.0, 0.3, rng()});
    const auto k = synthetic_weights({std::size_t(o), std::size_t(c), std::size_t(kh),
                                      std::size_t(kw)},
                                     60.0, rng());
    int oh = 0, ow = 0;
    const auto want = oracle::naive_conv(x.data, c, h, w, k.data, o, kh, kw, stride, padding,
                                         oh, ow);
    const auto cols = im2col(QuantTensor::activations(x),
                             {std::size_t(kh), std::size_t(kw), std::size_t(stride),
                              std::size_t(padding)});
    const auto y = reference_matmul(cols, weight_matrix(QuantTensor::weights(k)), SparqSettings{});
    ASSERT_EQ(y.shape, (Shape{std::size_t(oh * ow), std::size_t(o)}));
    for (int oc = 0; oc < o; ++oc) {
      for (int p = 0; p < oh * ow; ++p) {
        ASSERT_EQ(y.data[p * o + oc], want[oc * oh * ow + p]) << "trial " << trial;
      }
    }
  }
}

}  // namespace
}  // namespace sparq
