#include <gtest/gtest.h>

#include "test_support.hpp"

namespace miamix {
namespace {

using testing::Gen;
using testing::Rect;

TEST(Merge, Examples) {
  const std::vector<MixMask> consts{MixMask({4, 4}, 0.7), MixMask({4, 4}, 0.5)};
  EXPECT_EQ(mask_mean(merge_product(consts)), 0.35);
  EXPECT_NEAR(mask_mean(merge_clipped_sum(consts)), 0.2, 1e-15);
  EXPECT_EQ(mask_mean(merge_literal_clipped_sum(consts)), 1.0);

  const std::vector<MixMask> heavy{MixMask({4, 4}, 0.3), MixMask({4, 4}, 0.3)};
  const MixMask saturated = merge_clipped_sum(heavy);
  for (double v : saturated.data()) EXPECT_EQ(v, 0.0);
  const std::vector<MixMask> light{MixMask({4, 4}, 0.7), MixMask({4, 4}, 0.7)};
  const MixMask partial = merge_clipped_sum(light);
  for (double v : partial.data()) EXPECT_NEAR(v, 0.4, 1e-15);
}

TEST(Merge, SingleMaskPassesThrough) {
  Gen gen(1);
  const std::vector<MixMask> one{gen.mask({7, 9})};
  for (MergeMode mode : {MergeMode::Product, MergeMode::ClippedSum, MergeMode::LiteralClippedSum}) {
    EXPECT_EQ(merge_masks(one, mode), one[0]) << to_string(mode);
  }
}

TEST(Merge, Errors) {
  EXPECT_THROW(merge_product(std::vector<MixMask>{}), ArgumentError);
  const std::vector<MixMask> mismatch{MixMask({4, 4}, 1.0), MixMask({4, 5}, 1.0)};
  EXPECT_THROW(merge_product(mismatch), ArgumentError);
  EXPECT_THROW(merge_clipped_sum(mismatch), ArgumentError);
}

TEST(Merge, ProductBelowPointwiseMin) {
  Gen gen(2);
  for (int i = 0; i < 500; ++i) {
    const Dims d = gen.dims(1, 24);
    std::vector<MixMask> masks;
    for (int k = gen.integer(1, 4); k > 0; --k) masks.push_back(gen.mask(d));
    for (MergeMode mode : {MergeMode::Product, MergeMode::ClippedSum}) {
      const MixMask out = merge_masks(masks, mode);
      ASSERT_TRUE(testing::all_in_unit(out));
      for (std::size_t p = 0; p < out.data().size(); ++p) {
        double lo = 1.0;
        for (const MixMask& m : masks) lo = std::min(lo, m.data()[p]);
        ASSERT_LE(out.data()[p], lo + 1e-15) << to_string(mode);
      }
    }
  }
}

TEST(Merge, ProductCommutesAndAssociates) {
  Gen gen(3);
  for (int i = 0; i < 200; ++i) {
    const Dims d = gen.dims(1, 16);
    const MixMask a = gen.mask(d), b = gen.mask(d), c = gen.mask(d);
    const MixMask ab = merge_product(std::vector{a, b});
    const MixMask ba = merge_product(std::vector{b, a});
    const MixMask left = merge_product(std::vector{ab, c});
    const MixMask right = merge_product(std::vector{a, merge_product(std::vector{b, c})});
    for (std::size_t p = 0; p < ab.data().size(); ++p) {
      ASSERT_EQ(ab.data()[p], ba.data()[p]);
      ASSERT_NEAR(left.data()[p], right.data()[p], 1e-15);
    }
  }
}

TEST(Merge, ClippedSumEqualsProductOnDisjointBinary) {
  Gen gen(4);
  for (int i = 0; i < 300; ++i) {
    const Dims d = gen.dims(2, 24);
    // Assign each pixel to at most one layer's zero region.
    const int k = gen.integer(2, 4);
    std::vector<std::vector<double>> layers(static_cast<std::size_t>(k), std::vector<double>(d.pixels(), 1.0));
    for (std::size_t p = 0; p < d.pixels(); ++p) {
      const int owner = gen.integer(-1, k - 1);
      if (owner >= 0) layers[static_cast<std::size_t>(owner)][p] = 0.0;
    }
    std::vector<MixMask> masks;
    for (auto& l : layers) masks.emplace_back(d, std::move(l));
    ASSERT_EQ(merge_clipped_sum(masks), merge_product(masks));
  }
}

TEST(Merge, OverlappingCutMixMatchesUnionOracle) {
  Gen gen(5);
  for (int i = 0; i < 300; ++i) {
    const Dims d = gen.dims(4, 40);
    std::vector<Rect> rects;
    std::vector<MixMask> masks;
    for (int k = gen.integer(1, 3); k > 0; --k) {
      const double lam = gen.unit();
      const int cr = gen.integer(0, d.height - 1), cc = gen.integer(0, d.width - 1);
      rects.push_back(testing::cutmix_rect(lam, d, cr, cc));
      masks.push_back(cutmix_mask_at(lam, d, cr, cc));
    }
    const MixMask merged = merge_product(masks);
    ASSERT_EQ(static_cast<int>(testing::count_value(merged, 0.0)), testing::union_area(d, rects));
    ASSERT_EQ(merge_clipped_sum(masks), merged);
  }
}

TEST(Merge, MergedLambdaIsMaskMean) {
  Gen gen(6);
  const MixMask m = gen.mask({10, 10});
  EXPECT_EQ(merged_lambda(m), mask_mean(m));
}

TEST(MergeMode, NamesRoundTrip) {
  for (MergeMode mode : {MergeMode::Product, MergeMode::ClippedSum, MergeMode::LiteralClippedSum}) {
    EXPECT_EQ(parse_merge_mode(to_string(mode)), mode);
  }
  EXPECT_EQ(parse_merge_mode("mul"), MergeMode::Product);
  EXPECT_THROW(parse_merge_mode("max"), ConfigError);
  EXPECT_THROW(parse_merge_mode(""), ConfigError);
}

}  // namespace
}  // namespace miamix
