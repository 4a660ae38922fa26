#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "grove/random.h"
#include "oracles.h"

using namespace grove;

TEST(Rng, UniformIndexStaysInBounds) {
  Rng rng(3);
  for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 7ULL, 1000ULL, (1ULL << 63) + 5}) {
    for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.uniform_index(bound), bound);
  }
  EXPECT_THROW(rng.uniform_index(0), std::invalid_argument);
}

TEST(Rng, Uniform01InUnitInterval) {
  Rng rng(9);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
  Rng rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(DeriveSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (std::uint64_t t = 0; t < 500; ++t) seen.insert(derive_seed(seed, t));
  }
  EXPECT_EQ(seen.size(), 20u * 500u);
  EXPECT_EQ(derive_seed(5, 7), derive_seed(5, 7));
}

TEST(Bootstrap, SingleSampleAlwaysDrawn) {
  Rng rng(1);
  const auto bag = bootstrap(1, rng);
  EXPECT_EQ(bag.inbag_counts, std::vector<std::uint32_t>{1});
  EXPECT_TRUE(bag.oob_indices.empty());
}

TEST(Bootstrap, CountsSumToNAndOobIsComplement) {
  Rng rng(2);
  const auto bag = bootstrap(1000, rng);
  std::uint64_t total = 0;
  std::size_t zeros = 0;
  for (auto c : bag.inbag_counts) {
    total += c;
    zeros += c == 0;
  }
  EXPECT_EQ(total, 1000u);
  EXPECT_EQ(zeros, bag.oob_indices.size());
  EXPECT_TRUE(std::is_sorted(bag.oob_indices.begin(), bag.oob_indices.end()));
  for (auto i : bag.oob_indices) EXPECT_EQ(bag.inbag_counts[i], 0u);
}

TEST(Bootstrap, OobFractionNearInverseE) {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    Rng rng(seed);
    const auto bag = bootstrap(10000, rng);
    const double fraction = static_cast<double>(bag.oob_indices.size()) / 10000;
    EXPECT_GE(fraction, 0.35);
    EXPECT_LE(fraction, 0.39);
  }
}

TEST(Bootstrap, DeterministicForSeed) {
  Rng a(42), b(42);
  const auto x = bootstrap(5, a);
  const auto y = bootstrap(5, b);
  EXPECT_EQ(x.inbag_counts, y.inbag_counts);
  EXPECT_EQ(x.oob_indices, y.oob_indices);
}

TEST(Bootstrap, RejectsEmpty) {
  Rng rng(1);
  EXPECT_THROW(bootstrap(0, rng), std::invalid_argument);
}

TEST(AlgorithmS, FullSelection) {
  Rng rng(1);
  EXPECT_EQ(sample_without_replacement(5, 5, rng), (std::vector<std::uint32_t>{0, 1, 2, 3, 4}));
}

TEST(AlgorithmS, EmptyDraw) {
  Rng rng(1);
  EXPECT_TRUE(sample_without_replacement(7, 0, rng).empty());
}

TEST(AlgorithmS, TooManyRejected) {
  Rng rng(1);
  EXPECT_THROW(sample_without_replacement(3, 4, rng), std::invalid_argument);
}

TEST(AlgorithmS, AscendingDistinctCorrectSize) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(50);
    const std::size_t k = rng.uniform_index(n + 1);
    const auto s = sample_without_replacement(n, k, rng);
    ASSERT_EQ(s.size(), k);
    ASSERT_TRUE(std::adjacent_find(s.begin(), s.end(), std::greater_equal<>()) == s.end());
    if (!s.empty()) ASSERT_LT(s.back(), n);
  }
}

TEST(AlgorithmS, PairsUniform) {
  Rng rng(2024);
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> counts;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) {
    const auto s = sample_without_replacement(5, 2, rng);
    ++counts[{s[0], s[1]}];
  }
  ASSERT_EQ(counts.size(), 10u);
  double chi = 0.0;
  for (const auto& [pair, c] : counts) {
    EXPECT_NEAR(static_cast<double>(c) / trials, 0.1, 0.01);
    chi += (c - trials / 10.0) * (c - trials / 10.0) / (trials / 10.0);
  }
  EXPECT_GT(oracle::chi_square_upper_tail(chi, 9), 0.001);
}

TEST(Permute, EdgeCases) {
  Rng rng(1);
  EXPECT_TRUE(permuted(std::vector<int>{}, rng).empty());
  EXPECT_EQ(permuted(std::vector<int>{7}, rng), std::vector<int>{7});
}

TEST(Permute, SixOrdersUniform) {
  Rng rng(5);
  std::map<std::vector<int>, int> counts;
  const int trials = 60000;
  for (int i = 0; i < trials; ++i) ++counts[permuted(std::vector<int>{1, 2, 3}, rng)];
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [order, c] : counts) EXPECT_NEAR(static_cast<double>(c) / trials, 1.0 / 6, 0.01);
}

TEST(ChiSquareOracle, KnownQuantiles) {
  // 95th percentiles: dof 1 -> 3.841, dof 2 -> 5.991, dof 9 -> 16.919.
  EXPECT_NEAR(oracle::chi_square_upper_tail(3.841459, 1), 0.05, 1e-6);
  EXPECT_NEAR(oracle::chi_square_upper_tail(5.991465, 2), 0.05, 1e-6);
  EXPECT_NEAR(oracle::chi_square_upper_tail(16.918978, 9), 0.05, 1e-6);
}
