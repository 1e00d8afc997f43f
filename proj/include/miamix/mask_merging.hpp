#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "miamix/core.hpp"
#include "miamix/errors.hpp"

namespace miamix {

/// How k keep-masks combine into one.
///
/// Product multiplies keep weights. ClippedSum accumulates the revealed
/// (1 - mask) shares, clips them to [0, 1] and complements back.
/// LiteralClippedSum is clip(sum of keep weights, 0, 1), kept for
/// experiments; with keep-masks it saturates towards 1.
enum class MergeMode { Product, ClippedSum, LiteralClippedSum };

inline constexpr std::string_view to_string(MergeMode mode) noexcept {
  switch (mode) {
    case MergeMode::Product: return "product";
    case MergeMode::ClippedSum: return "sum";
    case MergeMode::LiteralClippedSum: return "sum-literal";
  }
  return "unknown";
}

inline MergeMode parse_merge_mode(std::string_view name) {
  if (name == "product" || name == "mul") return MergeMode::Product;
  if (name == "sum") return MergeMode::ClippedSum;
  if (name == "sum-literal") return MergeMode::LiteralClippedSum;
  throw ConfigError("unknown merge mode '" + std::string(name) +
                    "' (expected product, sum or sum-literal)");
}

namespace detail {

inline void check_merge_inputs(std::span<const MixMask> masks, const char* who) {
  require(!masks.empty(), std::string(who) + ": no masks to merge");
  for (const MixMask& m : masks) {
    require(m.dims() == masks.front().dims(), std::string(who) + ": mask dimensions differ");
  }
}

}  // namespace detail

inline MixMask merge_product(std::span<const MixMask> masks) {
  detail::check_merge_inputs(masks, "merge_product");
  MixMask out = masks.front();
  auto o = out.data();
  for (std::size_t i = 1; i < masks.size(); ++i) {
    const auto m = masks[i].data();
    for (std::size_t p = 0; p < o.size(); ++p) o[p] *= m[p];
  }
  return out;
}

/// 1 - clip(sum(1 - mask_i), 0, 1).
inline MixMask merge_clipped_sum(std::span<const MixMask> masks) {
  detail::check_merge_inputs(masks, "merge_clipped_sum");
  if (masks.size() == 1) return masks.front();
  const std::size_t n = masks.front().data().size();
  std::vector<double> revealed(n, 0.0);
  for (const MixMask& m : masks) {
    const auto d = m.data();
    for (std::size_t p = 0; p < n; ++p) revealed[p] += 1.0 - d[p];
  }
  for (double& v : revealed) v = 1.0 - std::clamp(v, 0.0, 1.0);
  return MixMask(masks.front().dims(), std::move(revealed));
}

/// clip(sum(mask_i), 0, 1).
inline MixMask merge_literal_clipped_sum(std::span<const MixMask> masks) {
  detail::check_merge_inputs(masks, "merge_literal_clipped_sum");
  const std::size_t n = masks.front().data().size();
  std::vector<double> sum(n, 0.0);
  for (const MixMask& m : masks) {
    const auto d = m.data();
    for (std::size_t p = 0; p < n; ++p) sum[p] += d[p];
  }
  for (double& v : sum) v = std::clamp(v, 0.0, 1.0);
  return MixMask(masks.front().dims(), std::move(sum));
}

inline MixMask merge_masks(std::span<const MixMask> masks, MergeMode mode) {
  switch (mode) {
    case MergeMode::Product: return merge_product(masks);
    case MergeMode::ClippedSum: return merge_clipped_sum(masks);
    case MergeMode::LiteralClippedSum: return merge_literal_clipped_sum(masks);
  }
  throw ArgumentError("merge_masks: unknown merge mode");
}

/// Label weight of the first image: the realized mean of the merged mask.
inline double merged_lambda(const MixMask& merged) { return mask_mean(merged); }

}  // namespace miamix
