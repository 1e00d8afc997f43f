#pragma once

// Ratio-preserving morphological augmentation of mixing masks: rotation,
// shear and box-filter smoothing.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "miamix/core.hpp"
#include "miamix/errors.hpp"
#include "miamix/generators.hpp"
#include "miamix/rng.hpp"

namespace miamix {

struct MaskAugPolicy {
  double p_smooth = 0.5;
  double p_aug = 0.25;
  std::vector<int> smooth_windows = {3, 5, 7};
  double max_rotate = std::numbers::pi / 6.0;
  double max_shear = 0.3;
  std::vector<GeneratorKind> eligible = {GeneratorKind::CutMix, GeneratorKind::FMix,
                                         GeneratorKind::GridMix};

  bool is_eligible(GeneratorKind kind) const {
    return std::find(eligible.begin(), eligible.end(), kind) != eligible.end();
  }
};

inline void validate(const MaskAugPolicy& policy) {
  auto probability = [](double p, const char* name) {
    detail::require<ConfigError>(p >= 0.0 && p <= 1.0, std::string(name) + " must lie in [0,1]");
  };
  probability(policy.p_smooth, "p_smooth");
  probability(policy.p_aug, "p_aug");
  for (int w : policy.smooth_windows) {
    detail::require<ConfigError>(w >= 3 && w % 2 == 1, "smoothing windows must be odd and >= 3");
  }
  detail::require<ConfigError>(policy.max_rotate >= 0.0 && policy.max_rotate <= std::numbers::pi,
                               "max_rotate must lie in [0, pi]");
  detail::require<ConfigError>(policy.max_shear >= 0.0 && policy.max_shear < 1.0,
                               "max_shear must lie in [0, 1)");
  for (GeneratorKind kind : policy.eligible) {
    detail::require<ConfigError>(kind != GeneratorKind::Mixup && kind != GeneratorKind::AGMix,
                                 "Mixup and AGMix masks are never augmented");
  }
}

/// What augment_mask decided to do to one mask. Recorded in the mix log so a
/// replay needs no policy probabilities.
struct MaskAugDecision {
  bool geometric = false;
  double theta = 0.0;
  double shear_x = 0.0;
  double shear_y = 0.0;
  int smooth_window = 0;  // 0 = no smoothing

  bool is_identity() const noexcept { return !geometric && smooth_window == 0; }
  friend bool operator==(const MaskAugDecision&, const MaskAugDecision&) = default;
};

namespace detail {

/// Reflect-101 index into [0, n) (edge pixel not repeated).
inline int reflect101(int i, int n) noexcept {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

/// Symmetric reflection into [0, n) (edge pixel repeated). A box filter
/// no wider than n over this padding counts every pixel exactly `window`
/// times, so it preserves the mask sum.
inline int reflect_symmetric(int i, int n) noexcept {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

inline bool is_binary(const MixMask& mask) noexcept {
  return std::all_of(mask.data().begin(), mask.data().end(),
                     [](double v) { return v == 0.0 || v == 1.0; });
}

/// Bilinear sample with edge-replicate fill, in lerp form so constant
/// neighbourhoods reproduce exactly.
inline double sample_bilinear(const MixMask& mask, double row, double col) noexcept {
  const int h = mask.height();
  const int w = mask.width();
  row = std::clamp(row, 0.0, static_cast<double>(h - 1));
  col = std::clamp(col, 0.0, static_cast<double>(w - 1));
  const int r0 = static_cast<int>(std::floor(row));
  const int c0 = static_cast<int>(std::floor(col));
  const int r1 = std::min(r0 + 1, h - 1);
  const int c1 = std::min(c0 + 1, w - 1);
  const double fr = row - r0;
  const double fc = col - c0;
  const double v00 = mask.at(r0, c0);
  const double v01 = mask.at(r0, c1);
  const double v10 = mask.at(r1, c0);
  const double v11 = mask.at(r1, c1);
  const double top = v00 + fc * (v01 - v00);
  const double bottom = v10 + fc * (v11 - v10);
  return std::clamp(top + fr * (bottom - top), 0.0, 1.0);
}

/// Resample through an inverse affine map about the mask center:
/// source = A * (dest - center) + center, A = [[a, b], [c, d]] acting on (x, y).
inline MixMask warp_inverse(const MixMask& mask, double a, double b, double c, double d) {
  const Dims dims = mask.dims();
  const double cy = (dims.height - 1) / 2.0;
  const double cx = (dims.width - 1) / 2.0;
  std::vector<double> out(dims.pixels());
  for (int r = 0; r < dims.height; ++r) {
    const double y = r - cy;
    for (int col = 0; col < dims.width; ++col) {
      const double x = col - cx;
      const double sx = a * x + b * y + cx;
      const double sy = c * x + d * y + cy;
      out[static_cast<std::size_t>(r) * dims.width + col] = sample_bilinear(mask, sy, sx);
    }
  }
  return MixMask(dims, std::move(out));
}

/// Box filter of a 0/1 mask by integer window counts: every output is
/// count / window^2, rounded once.
inline MixMask smooth_binary(const MixMask& mask, int window) {
  const Dims dims = mask.dims();
  const int half = window / 2;
  const auto w = static_cast<std::size_t>(dims.width);
  std::vector<int> rows(dims.pixels());
  std::vector<int> prefix(static_cast<std::size_t>(std::max(dims.height, dims.width) + window) + 1);
  for (int r = 0; r < dims.height; ++r) {
    for (int i = 0; i < dims.width + 2 * half; ++i) {
      const int c = reflect_symmetric(i - half, dims.width);
      prefix[i + 1] = prefix[i] + (mask.at(r, c) != 0.0 ? 1 : 0);
    }
    for (int c = 0; c < dims.width; ++c) rows[r * w + c] = prefix[c + window] - prefix[c];
  }
  std::vector<double> out(dims.pixels());
  const double area = static_cast<double>(window) * window;
  for (int c = 0; c < dims.width; ++c) {
    for (int i = 0; i < dims.height + 2 * half; ++i) {
      const int r = reflect_symmetric(i - half, dims.height);
      prefix[i + 1] = prefix[i] + rows[r * w + c];
    }
    for (int r = 0; r < dims.height; ++r) out[r * w + c] = (prefix[r + window] - prefix[r]) / area;
  }
  return MixMask(dims, std::move(out));
}

}  // namespace detail

/// Box filter of side `window` with symmetric reflect padding. Each pass
/// averages offsets from the centre tap, so a constant mask is returned
/// unchanged; the padding keeps the mask mean.
inline MixMask smooth_mask(const MixMask& mask, int window) {
  detail::require(!mask.empty(), "smooth_mask: empty mask");
  detail::require(window >= 1 && window % 2 == 1, "smooth_mask: window must be odd and positive");
  detail::require(window <= std::min(mask.height(), mask.width()),
                  "smooth_mask: window larger than the mask");
  if (window == 1) return mask;
  if (detail::is_binary(mask)) return detail::smooth_binary(mask, window);
  const Dims dims = mask.dims();
  const int half = window / 2;
  const double inv = 1.0 / window;
  std::vector<double> rows(dims.pixels());
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      const double centre = mask.at(r, c);
      double acc = 0.0;
      for (int o = -half; o <= half; ++o) {
        acc += mask.at(r, detail::reflect_symmetric(c + o, dims.width)) - centre;
      }
      rows[static_cast<std::size_t>(r) * dims.width + c] = centre + acc * inv;
    }
  }
  std::vector<double> out(dims.pixels());
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      const double centre = rows[static_cast<std::size_t>(r) * dims.width + c];
      double acc = 0.0;
      for (int o = -half; o <= half; ++o) {
        const int rr = detail::reflect_symmetric(r + o, dims.height);
        acc += rows[static_cast<std::size_t>(rr) * dims.width + c] - centre;
      }
      out[static_cast<std::size_t>(r) * dims.width + c] = std::clamp(centre + acc * inv, 0.0, 1.0);
    }
  }
  return MixMask(dims, std::move(out));
}

/// Rotation by theta (counter-clockwise in image coordinates) about the mask
/// center.
inline MixMask rotate_mask(const MixMask& mask, double theta) {
  detail::require(!mask.empty(), "rotate_mask: empty mask");
  detail::require(std::abs(theta) <= std::numbers::pi, "rotate_mask: |theta| must not exceed pi");
  if (theta == 0.0) return mask;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  // Inverse of a rotation is its transpose.
  return detail::warp_inverse(mask, cs, sn, -sn, cs);
}

/// Shear x' = x + shear_x * y, y' = y + shear_y * x about the mask center.
inline MixMask shear_mask(const MixMask& mask, double shear_x, double shear_y) {
  detail::require(!mask.empty(), "shear_mask: empty mask");
  detail::require(std::abs(shear_x) < 1.0 && std::abs(shear_y) < 1.0,
                  "shear_mask: shear factors must lie in (-1, 1)");
  if (shear_x == 0.0 && shear_y == 0.0) return mask;
  const double det = 1.0 - shear_x * shear_y;
  return detail::warp_inverse(mask, 1.0 / det, -shear_x / det, -shear_y / det, 1.0 / det);
}

/// Draw the augmentation for one mask. Ineligible kinds consume no draws.
/// Geometric: with probability p_aug, theta ~ U(-max_rotate, max_rotate) then
/// shear_x, shear_y ~ U(-max_shear, max_shear). Smoothing: independently with
/// probability p_smooth, a window uniform over the policy windows that fit.
inline MaskAugDecision draw_mask_augmentation(GeneratorKind kind, const MaskAugPolicy& policy,
                                              Dims dims, RngStream& rng) {
  MaskAugDecision decision;
  if (!policy.is_eligible(kind)) return decision;
  if (rng.bernoulli(policy.p_aug)) {
    decision.geometric = true;
    decision.theta = rng.uniform(-policy.max_rotate, policy.max_rotate);
    decision.shear_x = rng.uniform(-policy.max_shear, policy.max_shear);
    decision.shear_y = rng.uniform(-policy.max_shear, policy.max_shear);
  }
  if (rng.bernoulli(policy.p_smooth)) {
    std::vector<int> fitting;
    for (int w : policy.smooth_windows) {
      if (w <= std::min(dims.height, dims.width)) fitting.push_back(w);
    }
    if (!fitting.empty()) decision.smooth_window = fitting[rng.uniform_index(fitting.size())];
  }
  return decision;
}

/// Rotate, then shear, then smooth, as recorded in `decision`.
///
/// A binary input is re-binarized after the warp to exactly its original
/// number of ones (largest warped values first, ties to the lower index), so
/// geometric augmentation leaves its realized ratio unchanged.
inline MixMask apply_mask_augmentation(const MixMask& mask, const MaskAugDecision& decision) {
  if (decision.is_identity()) return mask;
  MixMask out = mask;
  if (decision.geometric) {
    out = rotate_mask(out, decision.theta);
    out = shear_mask(out, decision.shear_x, decision.shear_y);
    if (detail::is_binary(mask)) {
      const auto ones = static_cast<std::size_t>(
          std::count(mask.data().begin(), mask.data().end(), 1.0));
      out = MixMask(mask.dims(), detail::threshold_top(out.data(), ones));
    }
  }
  if (decision.smooth_window > 1) out = smooth_mask(out, decision.smooth_window);
  return out;
}

inline MixMask augment_mask(const MixMask& mask, GeneratorKind kind, const MaskAugPolicy& policy,
                            RngStream& rng) {
  return apply_mask_augmentation(mask, draw_mask_augmentation(kind, policy, mask.dims(), rng));
}

}  // namespace miamix
