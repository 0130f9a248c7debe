#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lrw/normal.hpp"
#include "lrw/rng.hpp"

using namespace lrw;

// Known-answer vectors distributed with Random123 (kat_vectors, philox4x32_10).
TEST(Philox, KnownAnswerVectors) {
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RngStream, SameKeySameSequence) {
  RngStream a(42, {3, 7}), b(42, {3, 7});
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, DistinctPathsDiffer) {
  std::set<std::uint64_t> first;
  for (std::uint64_t s = 0; s < 64; ++s) first.insert(RngStream(1, s).next_u64());
  first.insert(RngStream(1, {0, 0}).next_u64());
  first.insert(RngStream(2, 0).next_u64());
  EXPECT_EQ(first.size(), 66u);
}

TEST(RngStream, EveryDrawConsumesOneWord) {
  RngStream r(5, 0);
  r.next_u64();
  r.uniform();
  r.uniform_open();
  r.normal();
  EXPECT_EQ(r.words_drawn(), 4u);
  // a copy forks an identical sequence
  RngStream c = r;
  EXPECT_EQ(c.next_u64(), r.next_u64());
}

TEST(RngStream, UniformRangeAndMoments) {
  RngStream r(9, 1);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(s2 / n, 1.0 / 3.0, 0.005);
}

TEST(RngStream, NormalMoments) {
  RngStream r(11, 2);
  const int n = 200000;
  double s = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    ASSERT_TRUE(std::isfinite(z));
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 0.015);
  EXPECT_NEAR(s4 / n, 3.0, 0.1);
}

TEST(Normal, QuantileInvertsCdf) {
  for (double p : {1e-300, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.9, 0.97575, 0.999}) {
    const double x = normal_quantile(p);
    EXPECT_NEAR(normal_cdf(x) / p, 1.0, 1e-12) << p;
  }
  EXPECT_EQ(normal_quantile(0.0), -INFINITY);
  EXPECT_EQ(normal_quantile(1.0), INFINITY);
}

TEST(Normal, ReferenceValues) {
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
  EXPECT_NEAR(normal_pdf(0.0), 1.0 / std::sqrt(2.0 * M_PI), 1e-16);
  // upper tail keeps relative accuracy where 1 - cdf cancels
  EXPECT_NEAR(normal_sf(10.0) / 7.619853024160526e-24, 1.0, 1e-12);
}
