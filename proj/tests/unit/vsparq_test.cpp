#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sparq/vsparq.hpp"

namespace sparq {
namespace {

const std::vector<TrimConfig> kNibbleConfigs{TrimConfig::five_opt(), TrimConfig::three_opt(),
                                             TrimConfig::two_opt()};

TEST(EncodePair, Examples) {
  const auto right = encode_pair(0, 200, TrimConfig::five_opt(), true);
  EXPECT_EQ(right.mode, PairMode::RightFull);
  EXPECT_EQ(dequant(right.right), 200u);
  EXPECT_TRUE(right.mux_ctrl);

  for (const auto& cfg : kNibbleConfigs) {
    const auto zero = encode_pair(0, 0, cfg, true);
    EXPECT_EQ(zero.mode, PairMode::LeftFull);
    EXPECT_EQ(dequant(zero.left), 0u);
    EXPECT_EQ(dequant(zero.right), 0u);
  }

  const auto both = encode_pair(27, 33, TrimConfig::five_opt(), true);
  EXPECT_EQ(both.mode, PairMode::BothTrimmed);
  EXPECT_FALSE(both.mux_ctrl);
  EXPECT_EQ(dequant(both.left), 28u);
  EXPECT_EQ(dequant(both.right), 32u);
}

TEST(EncodePair, ModeFollowsZeros) {
  for (unsigned a = 0; a < 256; a += 5) {
    for (unsigned b = 0; b < 256; b += 7) {
      const auto p = encode_pair(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b),
                                 TrimConfig::three_opt(), false);
      if (b == 0) {
        EXPECT_EQ(p.mode, PairMode::LeftFull);
      } else if (a == 0) {
        EXPECT_EQ(p.mode, PairMode::RightFull);
      } else {
        EXPECT_EQ(p.mode, PairMode::BothTrimmed);
      }
    }
  }
}

TEST(EncodePair, NarrowConfigsUseTwiceTheBits) {
  // 6opt has 3-bit windows, so a lone value gets a 6-bit window.
  const auto p = encode_pair(201, 0, TrimConfig::six_opt(), true);
  EXPECT_EQ(p.mode, PairMode::LeftFull);
  EXPECT_EQ(dequant(p.left), 200u);
}

TEST(EncodePairUnpaired, AlwaysTrimsBoth) {
  const auto p = encode_pair_unpaired(0, 201, TrimConfig::five_opt(), false);
  EXPECT_EQ(p.mode, PairMode::BothTrimmed);
  EXPECT_EQ(dequant(p.left), 0u);
  EXPECT_EQ(dequant(p.right), 192u);
}

TEST(PairContribution, Examples) {
  const PairEncoding lone{PairMode::LeftFull, {200, 0, false}, {}, true};
  EXPECT_EQ(pair_contribution(lone, -3, 17), -600);

  const auto both = encode_pair(27, 33, TrimConfig::five_opt(), false);
  EXPECT_EQ(pair_contribution(both, 1, 1), 58);

  for (const auto& cfg : kNibbleConfigs) {
    EXPECT_EQ(pair_contribution(encode_pair(0, 0, cfg, true), 127, -128), 0);
  }
}

TEST(DotProduct, Examples) {
  const std::vector<std::uint8_t> x{0, 200, 13, 0};
  const std::vector<std::int8_t> w{5, -3, 7, 9};
  for (const auto& cfg : kNibbleConfigs) {
    for (bool r : {false, true}) EXPECT_EQ(dot_product(x, w, cfg, r, true), -509);
  }
  const std::vector<std::uint8_t> zeros(9, 0);
  const std::vector<std::int8_t> any{1, -2, 3, -4, 5, -6, 7, -8, 9};
  EXPECT_EQ(dot_product(zeros, any, TrimConfig::two_opt(), true, true), 0);

  const std::vector<std::uint8_t> x2{27, 33};
  const std::vector<std::int8_t> ones{1, 1};
  EXPECT_EQ(dot_product(x2, ones, TrimConfig::five_opt(), true, true), 60);
}

TEST(DotProduct, LengthMismatchThrows) {
  const std::vector<std::uint8_t> x{1, 2, 3};
  const std::vector<std::int8_t> w{1, 2};
  EXPECT_THROW(dot_product(x, w, TrimConfig::five_opt(), true, true), std::invalid_argument);
  EXPECT_THROW(exact_dot_product(x, w), std::invalid_argument);
}

TEST(DotProduct, OddLengthTailIsExact) {
  const std::vector<std::uint8_t> x{201};
  const std::vector<std::int8_t> w{-7};
  EXPECT_EQ(dot_product(x, w, TrimConfig::two_opt(), false, true), 201 * -7);
}

TEST(DotProductProperty, SparsityExactness) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(1, 64);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = len(rng);
    const auto x = oracle::pair_sparse_vector(rng, n);
    const auto w = oracle::random_weights(rng, n);
    const auto want = oracle::exact_dot(x, w);
    for (const auto& cfg : kNibbleConfigs) {
      for (bool r : {false, true}) {
        ASSERT_EQ(dot_product(x, w, cfg, r, true), want) << cfg.name() << " trial " << trial;
      }
    }
  }
}

TEST(DotProductProperty, VsparqDominatesUnpaired) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> byte(1, 255), coin(0, 1);
  const std::size_t n = 64;
  for (const auto& cfg : {TrimConfig::five_opt(), TrimConfig::three_opt(), TrimConfig::two_opt(),
                          TrimConfig::six_opt(), TrimConfig::seven_opt()}) {
    for (bool r : {false, true}) {
      double se_on = 0, se_off = 0;
      std::mt19937_64 local(rng());
      for (int trial = 0; trial < 400; ++trial) {
        std::vector<std::uint8_t> x(n);
        for (auto& v : x) v = coin(local) ? static_cast<std::uint8_t>(byte(local)) : 0;
        const auto w = oracle::random_weights(local, n);
        const double exact = static_cast<double>(oracle::exact_dot(x, w));
        const double on = static_cast<double>(dot_product(x, w, cfg, r, true)) - exact;
        const double off = static_cast<double>(dot_product(x, w, cfg, r, false)) - exact;
        se_on += on * on;
        se_off += off * off;
      }
      EXPECT_LE(se_on, se_off) << cfg.name() << (r ? "+R" : "-R");
    }
  }
}

TEST(DotProductProperty, ZeroWeightsGiveZero) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<std::uint8_t> x(33);
  for (auto& v : x) v = static_cast<std::uint8_t>(byte(rng));
  const std::vector<std::int8_t> w(x.size(), 0);
  for (const auto& name : TrimConfig::names()) {
    for (bool r : {false, true}) {
      for (bool vs : {false, true}) {
        EXPECT_EQ(dot_product(x, w, TrimConfig::named(name), r, vs), 0);
      }
    }
  }
}

TEST(DotProductProperty, TrailingZeroActivationIsNeutral) {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> byte(0, 255), wd(-128, 127);
  std::uniform_int_distribution<std::size_t> len(1, 40);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint8_t> x(len(rng));
    for (auto& v : x) v = static_cast<std::uint8_t>(byte(rng));
    auto w = oracle::random_weights(rng, x.size());
    for (const auto& name : TrimConfig::names()) {
      const auto cfg = TrimConfig::named(name);
      for (bool vs : {false, true}) {
        const auto before = dot_product(x, w, cfg, true, vs);
        auto xp = x;
        auto wp = w;
        xp.push_back(0);
        wp.push_back(static_cast<std::int8_t>(wd(rng)));
        EXPECT_EQ(dot_product(xp, wp, cfg, true, vs), before) << name << " trial " << trial;
      }
    }
  }
}

}  // namespace
}  // namespace sparq
