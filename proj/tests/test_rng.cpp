#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>
#include <vector>

#include "test_support.hpp"

namespace miamix {
namespace {

TEST(Philox, KnownAnswerVectors) {
  // Random123 kat_vectors for philox4x32_10.
  EXPECT_EQ(Philox4x32::apply({0, 0, 0, 0}, {0, 0}),
            (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::apply({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              {0xffffffffu, 0xffffffffu}),
            (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::apply({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              {0xa4093822u, 0x299f31d0u}),
            (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

std::vector<std::uint64_t> take(RngStream rng, int n) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < n; ++i) out.push_back(rng.next_u64());
  return out;
}

TEST(RngStream, SameKeyGivesSameSequence) {
  EXPECT_EQ(take(RngStream(7, 3, Purpose::Methods, 2), 100),
            take(RngStream(7, 3, Purpose::Methods, 2), 100));
}

TEST(RngStream, EveryKeyComponentChangesTheSequence) {
  const auto base = take(RngStream(7, 3, Purpose::Methods, 2), 8);
  EXPECT_NE(base, take(RngStream(8, 3, Purpose::Methods, 2), 8));
  EXPECT_NE(base, take(RngStream(7, 4, Purpose::Methods, 2), 8));
  EXPECT_NE(base, take(RngStream(7, 3, Purpose::Lambdas, 2), 8));
  EXPECT_NE(base, take(RngStream(7, 3, Purpose::Methods, 3), 8));
  EXPECT_NE(base, take(RngStream(7, std::uint64_t{3} | (std::uint64_t{1} << 40), Purpose::Methods, 2), 8));
  EXPECT_NE(base, take(RngStream(7 | (std::uint64_t{1} << 40), 3, Purpose::Methods, 2), 8));
}

TEST(RngStream, SubstreamIgnoresParentPosition) {
  RngStream parent(11, 5);
  const auto fresh = take(parent.substream(Purpose::MaskShape, 1), 10);
  for (int i = 0; i < 37; ++i) parent.next_u64();
  EXPECT_EQ(take(parent.substream(Purpose::MaskShape, 1), 10), fresh);
}

TEST(RngStream, ThreadScheduleDoesNotMatter) {
  constexpr int kStreams = 64;
  std::vector<std::vector<std::uint64_t>> serial(kStreams), threaded(kStreams);
  for (int s = 0; s < kStreams; ++s) serial[s] = take(RngStream(99, s), 50);
  std::vector<std::jthread> pool;
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([&, t] {
      for (int s = kStreams - 1 - t; s >= 0; s -= 4) threaded[s] = take(RngStream(99, s), 50);
    });
  }
  pool.clear();
  EXPECT_EQ(serial, threaded);
}

TEST(RngStream, UniformRanges) {
  RngStream rng(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double o = rng.uniform_open();
    ASSERT_GT(o, 0.0);
    ASSERT_LT(o, 1.0);
    const double r = rng.uniform(-2.0, 3.0);
    ASSERT_GE(r, -2.0);
    ASSERT_LT(r, 3.0);
  }
}

TEST(RngStream, UniformIndexIsUnbiased) {
  // Chi-square over 7 bins, 70000 draws; 99.9% critical value for 6 dof is 22.46.
  RngStream rng(2, 2);
  std::array<int, 7> counts{};
  for (int i = 0; i < 70000; ++i) counts[rng.uniform_index(7)]++;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  EXPECT_LT(chi2, 22.46);
  EXPECT_EQ(rng.uniform_index(1), 0u);
  EXPECT_THROW(rng.uniform_index(0), ArgumentError);
}

TEST(RngStream, UniformIndexHugeRange) {
  RngStream rng(3, 3);
  const std::uint64_t n = (std::uint64_t{1} << 63) + 12345;
  for (int i = 0; i < 1000; ++i) ASSERT_LT(rng.uniform_index(n), n);
}

TEST(RngStream, NormalMoments) {
  RngStream rng(4, 4);
  constexpr int n = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
    sum4 += x * x * x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sum2 / n, 1.0, 0.015);
  EXPECT_NEAR(sum4 / n, 3.0, 0.08);
}

TEST(RngStream, GammaMatchesInverseCdfReference) {
  // Gamma(a)/(Gamma(a)+Gamma(b)) ~ Beta(a, b); compare against inverse-CDF Beta draws.
  for (const auto [a, b] : {std::pair{0.3, 0.7}, std::pair{1.0, 1.0}, std::pair{2.5, 4.0}}) {
    RngStream rng(5, static_cast<std::uint64_t>(a * 100 + b));
    std::mt19937_64 reference(17);
    constexpr std::size_t n = 20000;
    std::vector<double> ours(n), theirs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rng.gamma(a);
      const double y = rng.gamma(b);
      ours[i] = x / (x + y);
      theirs[i] = testing::beta_inverse_cdf_draw(a, b, reference);
    }
    EXPECT_LT(testing::ks_two_sample(ours, theirs), testing::ks_critical_001(n, n))
        << "a=" << a << " b=" << b;
  }
}

TEST(RngStream, GammaMean) {
  for (double shape : {0.1, 0.5, 1.0, 3.0, 30.0}) {
    RngStream rng(6, static_cast<std::uint64_t>(shape * 10));
    constexpr int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      ASSERT_GE(g, 0.0);
      sum += g;
    }
    // sd of the mean is sqrt(shape / n).
    EXPECT_NEAR(sum / n, shape, 5.0 * std::sqrt(shape / n)) << "shape " << shape;
  }
}

TEST(RngStream, GammaRejectsBadShape) {
  RngStream rng(7, 7);
  EXPECT_THROW(rng.gamma(0.0), ArgumentError);
  EXPECT_THROW(rng.gamma(-1.0), ArgumentError);
  EXPECT_THROW(rng.gamma(std::numeric_limits<double>::infinity()), ArgumentError);
}

TEST(RngStream, WorksWithStandardShuffle) {
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  RngStream rng(8, 8);
  std::shuffle(v.begin(), v.end(), rng);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sorted[i], i);
}

}  // namespace
}  // namespace miamix
