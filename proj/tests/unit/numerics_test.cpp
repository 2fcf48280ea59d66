// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/numerics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "test_support.hpp"

namespace prosfda {
namespace {

using testing::random_array;

TEST(Softmax, SymmetricInputIsUniform) {
  const RealArray p = softmax(RealArray({2}, {0.0, 0.0}));
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  const RealArray p = softmax(RealArray({2}, {1000.0, 0.0}));
  EXPECT_TRUE(p.all_finite());
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_LT(p[1], 1e-300);
}

TEST(Softmax, MatchesNaiveFormula) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const RealArray x = random_array(rng, {5}, -3.0, 3.0);
    const double tau = rng.uniform(0.2, 2.0);
    const RealArray p = softmax(x, tau);
    double sum = 0.0;
    for (double v : x.data()) sum += std::exp(v / tau);
    for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(p[c], std::exp(x[c] / tau) / sum, 1e-12);
  }
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  Rng rng(12);
  const RealArray x = random_array(rng, {7, 3, 4}, -10.0, 10.0);
  RealArray shifted = x;
  for (double& v : shifted.data()) v += 123.25;
  const RealArray p = softmax(x), q = softmax(shifted);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0.0;
    for (double v : p.row(r)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
}

TEST(Softmax, PreservesArgmax) {
  Rng rng(13);
  const RealArray x = random_array(rng, {200, 6}, -5.0, 5.0);
  EXPECT_EQ(argmax_lastaxis(softmax(x)), argmax_lastaxis(x));
}

TEST(Softmax, RejectsBadInput) {
  EXPECT_THROW(softmax(RealArray({2}, {0.0, 1.0}), 0.0), ValueError);
  EXPECT_THROW(softmax(RealArray({2}, {0.0, 1.0}), -1.0), ValueError);
  EXPECT_THROW(softmax(RealArray({2}, {NAN, 1.0})), ValueError);
  EXPECT_THROW(softmax(RealArray({2}, {INFINITY, 1.0})), ValueError);
}

TEST(Argmax, Examples) {
  EXPECT_EQ(argmax_lastaxis(RealArray({3}, {0.2, 0.7, 0.1})), std::vector<std::int32_t>{1});
  EXPECT_EQ(argmax_lastaxis(RealArray({2}, {0.5, 0.5})), std::vector<std::int32_t>{0});
}

TEST(Argmax, MatchesLinearScan) {
  Rng rng(14);
  RealArray a = random_array(rng, {100, 4});
  // force some ties
  for (std::size_t r = 0; r < 100; r += 7) a.row(r)[3] = a.row(r)[1] = 2.0;
  const auto got = argmax_lastaxis(a);
  for (std::size_t r = 0; r < 100; ++r) {
    auto row = a.row(r);
    std::int32_t best = 0;
    for (std::int32_t c = 1; c < 4; ++c) {
      if (row[static_cast<std::size_t>(c)] > row[static_cast<std::size_t>(best)]) best = c;
    }
    EXPECT_EQ(got[r], best) << "row " << r;
  }
}

TEST(Argmax, EmptyAxisThrows) {
  EXPECT_THROW(argmax_lastaxis(RealArray({3, 0})), ShapeError);
}

TEST(Top2, Examples) {
  const Top2 a = top2_lastaxis(RealArray({3}, {0.1, 0.6, 0.3}));
  EXPECT_EQ(a.first[0], 0.6);
  EXPECT_EQ(a.second[0], 0.3);
  const Top2 b = top2_lastaxis(RealArray({2}, {0.5, 0.5}));
  EXPECT_EQ(b.first[0], 0.5);
  EXPECT_EQ(b.second[0], 0.5);
}

TEST(Top2, MatchesSortOracle) {
  Rng rng(15);
  const RealArray a = random_array(rng, {50, 6});
  const Top2 t = top2_lastaxis(a);
  for (std::size_t r = 0; r < 50; ++r) {
    std::vector<double> v(a.row(r).begin(), a.row(r).end());
    std::sort(v.begin(), v.end(), std::greater<>());
    EXPECT_EQ(t.first[r], v[0]);
    EXPECT_EQ(t.second[r], v[1]);
    EXPECT_GE(t.first[r], t.second[r]);
  }
}

TEST(Top2, ShortAxisThrows) {
  EXPECT_THROW(top2_lastaxis(RealArray({4, 1})), ShapeError);
}

TEST(RealArray, ShapeMustMatchData) {
  EXPECT_THROW(RealArray({2, 3}, std::vector<double>(5)), ShapeError);
  const RealArray a({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(a.rows(), 2u);
  EXPECT_EQ(a.row(1)[0], 4.0);
}

// Plain SplitMix64 seeded with the mixed key; written independently of Rng.
std::vector<std::uint64_t> splitmix_reference(std::uint64_t seed, std::uint64_t stream, int n) {
  auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  std::uint64_t state = mix(seed ^ mix(stream + 0x9E3779B97F4A7C15ULL));
  std::vector<std::uint64_t> out;
  for (int i = 0; i < n; ++i) {
    state += 0x9E3779B97F4A7C15ULL;
    out.push_back(mix(state));
  }
  return out;
}

TEST(Rng, IsSplitMix64OverMixedKey) {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xFFFFFFFFFFFFFFFFULL}) {
    Rng rng(seed, 3);
    for (std::uint64_t expected : splitmix_reference(seed, 3, 100)) EXPECT_EQ(rng.next_u64(), expected);
  }
}

TEST(Rng, EqualSeedsGiveIdenticalStreams) {
  Rng a(99), b(99), c(100), d(99, 1);
  bool differs_seed = false, differs_stream = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs_seed |= x != c.next_u64();
    differs_stream |= x != d.next_u64();
  }
  EXPECT_TRUE(differs_seed);
  EXPECT_TRUE(differs_stream);
}

TEST(Rng, CounterIsAddressable) {
  Rng a(5);
  for (int i = 0; i < 10; ++i) a.next_u64();
  const auto eleventh = a.next_u64();
  Rng b(5);
  b.set_counter(10);
  EXPECT_EQ(b.next_u64(), eleventh);
}

TEST(Rng, DrawsStayInRange) {
  Rng rng(6);
  double mean = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(rng.below(7), 7u);
    const double z = rng.normal();
    mean += z;
    sq += z * z;
  }
  mean /= n;
  EXPECT_NEAR(mean, 0.0, 0.05);
  EXPECT_NEAR(sq / n, 1.0, 0.05);
}

}  // namespace
}  // namespace prosfda
