#pragma once

// Batch orchestration of the multi-stage mix:
//   1. pair every sample with a partner (or itself, with probability p_self),
//   2. build two independently augmented views of the batch,
//   3. per sample draw k, k methods and k Dirichlet ratios,
//   4. generate, augment and merge the k masks,
//   5. blend the views with the merged mask and the labels with its mean.
//
// Every draw comes from a purpose-tagged substream of (seed, sample stream),
// so the output of a batch does not depend on the number of workers.

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <span>
#include <thread>
#include <vector>

#include "miamix/core.hpp"
#include "miamix/errors.hpp"
#include "miamix/generators.hpp"
#include "miamix/mask_augmentation.hpp"
#include "miamix/mask_merging.hpp"
#include "miamix/ratio_sampling.hpp"
#include "miamix/rng.hpp"

namespace miamix {

// ---------------------------------------------------------------------------
// View augmentation

struct ViewAugPolicy {
  bool enabled = true;
  double hflip_p = 0.5;
  int crop_padding = 4;
};

/// Concrete transform applied to one view: optional horizontal flip, then a
/// reflect-padded crop at (offset_row, offset_col) of the padded image.
struct ViewOps {
  bool flip = false;
  int padding = 0;
  int offset_row = 0;
  int offset_col = 0;

  bool is_identity() const noexcept {
    return !flip && offset_row == padding && offset_col == padding;
  }
  friend bool operator==(const ViewOps&, const ViewOps&) = default;
};

inline ViewOps draw_view_ops(const ViewAugPolicy& policy, RngStream& rng) {
  ViewOps ops;
  if (!policy.enabled) return ops;
  ops.flip = rng.bernoulli(policy.hflip_p);
  ops.padding = policy.crop_padding;
  const auto span = static_cast<std::uint64_t>(2 * policy.crop_padding + 1);
  ops.offset_row = static_cast<int>(rng.uniform_index(span));
  ops.offset_col = static_cast<int>(rng.uniform_index(span));
  return ops;
}

inline Image apply_view_ops(const Image& image, const ViewOps& ops) {
  detail::require(!image.empty(), "view_augment: empty image");
  detail::require(ops.padding >= 0 && ops.offset_row >= 0 && ops.offset_col >= 0 &&
                      ops.offset_row <= 2 * ops.padding && ops.offset_col <= 2 * ops.padding,
                  "view_augment: crop offsets outside the padded image");
  if (ops.is_identity()) return image;
  const int h = image.height();
  const int w = image.width();
  const int channels = image.channels();
  Image out(h, w, channels);
  for (int r = 0; r < h; ++r) {
    const int src_r = detail::reflect101(r + ops.offset_row - ops.padding, h);
    for (int c = 0; c < w; ++c) {
      int src_c = detail::reflect101(c + ops.offset_col - ops.padding, w);
      if (ops.flip) src_c = w - 1 - src_c;
      for (int ch = 0; ch < channels; ++ch) out.at(r, c, ch) = image.at(src_r, src_c, ch);
    }
  }
  return out;
}

inline Image view_augment(const Image& image, const ViewAugPolicy& policy, RngStream& rng) {
  return apply_view_ops(image, draw_view_ops(policy, rng));
}

// ---------------------------------------------------------------------------
// Configuration

enum class PartnerSampling { Permutation, WithReplacement };

struct MiamixConfig {
  double alpha = 1.0;
  std::vector<int> k_choices = {1, 2};
  MethodWeights method_weights = {2.0, 1.0, 1.0, 1.0, 1.0};
  double p_self = 0.10;
  MaskAugPolicy mask_aug;
  MergeMode merge_mode = MergeMode::Product;
  ViewAugPolicy view_aug;
  GeneratorParams generators;
  PartnerSampling pairing = PartnerSampling::Permutation;
  std::uint64_t seed = 0;
};

inline void validate(const MiamixConfig& cfg) {
  detail::require<ConfigError>(cfg.alpha > 0.0 && std::isfinite(cfg.alpha), "alpha must be positive");
  detail::require<ConfigError>(!cfg.k_choices.empty(), "k must list at least one layer count");
  for (int k : cfg.k_choices) {
    detail::require<ConfigError>(k >= 1 && k <= 64, "layer counts must lie in [1, 64]");
  }
  validate_method_weights(cfg.method_weights);
  detail::require<ConfigError>(cfg.p_self >= 0.0 && cfg.p_self <= 1.0, "p_self must lie in [0,1]");
  validate(cfg.mask_aug);
  detail::require<ConfigError>(cfg.view_aug.hflip_p >= 0.0 && cfg.view_aug.hflip_p <= 1.0,
                               "hflip_p must lie in [0,1]");
  detail::require<ConfigError>(cfg.view_aug.crop_padding >= 0, "crop_padding must be >= 0");
  detail::require<ConfigError>(cfg.generators.fmix_decay > 0.0, "fmix_decay must be positive");
  detail::require<ConfigError>(cfg.generators.grid_min >= 1 &&
                                   cfg.generators.grid_min <= cfg.generators.grid_max,
                               "grid range must satisfy 1 <= grid_min <= grid_max");
}

// ---------------------------------------------------------------------------
// Pairing

struct PairAssignment {
  std::size_t first = 0;
  std::size_t partner = 0;
  bool is_self_mix = false;
  friend bool operator==(const PairAssignment&, const PairAssignment&) = default;
};

/// Partners from a uniform permutation (or uniform draws with replacement);
/// then, independently per sample, the partner becomes the sample itself
/// with probability p_self.
inline std::vector<PairAssignment> pair_samples(std::size_t batch_size, double p_self,
                                                RngStream& rng,
                                                PartnerSampling sampling = PartnerSampling::Permutation) {
  detail::require(batch_size >= 1, "pair_samples: batch must not be empty");
  detail::require(p_self >= 0.0 && p_self <= 1.0, "pair_samples: p_self must lie in [0,1]");
  std::vector<std::size_t> partners(batch_size);
  if (sampling == PartnerSampling::Permutation) {
    for (std::size_t i = 0; i < batch_size; ++i) partners[i] = i;
    for (std::size_t i = batch_size; i > 1; --i) {
      std::swap(partners[i - 1], partners[rng.uniform_index(i)]);
    }
  } else {
    for (auto& p : partners) p = rng.uniform_index(batch_size);
  }
  std::vector<PairAssignment> pairs(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const bool self = rng.bernoulli(p_self);
    pairs[i] = {i, self ? i : partners[i], self};
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Per-sample plan

/// Everything drawn for one mixed sample. Mask shapes are not stored; they
/// are regenerated from (seed, stream_id, MaskShape, layer).
struct MixPlan {
  std::size_t index_first = 0;
  std::size_t index_partner = 0;
  bool is_self_mix = false;
  int k = 0;
  std::vector<GeneratorKind> methods;
  std::vector<double> lambdas;
  double residual = 0.0;
  std::vector<MaskAugDecision> mask_aug_draws;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t partner_stream_id = 0;
  ViewOps first_view;
  ViewOps partner_view;
};

struct MixedSample {
  Image image;
  SoftLabel label;
  double lambda_merged = 0.0;
  MixMask mask;  // merged mask
  MixPlan plan;
};

/// Draw layer count, methods, ratios and mask augmentations from the
/// sample's substreams.
inline MixPlan draw_plan(const MiamixConfig& cfg, Dims dims, const RngStream& sample) {
  MixPlan plan;
  plan.seed = sample.seed();
  plan.stream_id = sample.stream_id();
  RngStream k_rng = sample.substream(Purpose::LayerCount);
  plan.k = sample_layer_count(cfg.k_choices, k_rng);
  RngStream method_rng = sample.substream(Purpose::Methods);
  plan.methods = sample_methods(plan.k, cfg.method_weights, method_rng).methods;
  RngStream lambda_rng = sample.substream(Purpose::Lambdas);
  RatioDraw ratios = sample_lambdas(plan.k, cfg.alpha, lambda_rng);
  plan.lambdas = std::move(ratios.lambdas);
  plan.residual = ratios.residual;
  plan.mask_aug_draws.reserve(static_cast<std::size_t>(plan.k));
  for (int j = 0; j < plan.k; ++j) {
    RngStream aug_rng = sample.substream(Purpose::MaskAugment, static_cast<std::uint16_t>(j));
    plan.mask_aug_draws.push_back(
        draw_mask_augmentation(plan.methods[static_cast<std::size_t>(j)], cfg.mask_aug, dims, aug_rng));
  }
  return plan;
}

/// Generate, augment and merge the plan's masks.
inline MixMask plan_mask(const MixPlan& plan, Dims dims, const GeneratorParams& generators,
                         MergeMode merge_mode) {
  detail::require(plan.k >= 1 && plan.methods.size() == static_cast<std::size_t>(plan.k) &&
                      plan.lambdas.size() == static_cast<std::size_t>(plan.k) &&
                      plan.mask_aug_draws.size() == static_cast<std::size_t>(plan.k),
                  "plan_mask: plan arrays must all have length k");
  std::vector<MixMask> masks;
  masks.reserve(static_cast<std::size_t>(plan.k));
  const RngStream sample(plan.seed, plan.stream_id);
  for (int j = 0; j < plan.k; ++j) {
    const auto layer = static_cast<std::size_t>(j);
    RngStream shape_rng = sample.substream(Purpose::MaskShape, static_cast<std::uint16_t>(j));
    MixMask mask = generate(plan.methods[layer], plan.lambdas[layer], dims, shape_rng, generators);
    masks.push_back(apply_mask_augmentation(mask, plan.mask_aug_draws[layer]));
  }
  return merge_masks(masks, merge_mode);
}

/// Blend two prepared views according to an existing plan.
inline MixedSample execute_plan(MixPlan plan, const Image& first_view, const SoftLabel& first_label,
                                const Image& partner_view, const SoftLabel& partner_label,
                                const GeneratorParams& generators, MergeMode merge_mode) {
  detail::require(first_view.dims() == partner_view.dims() &&
                      first_view.channels() == partner_view.channels(),
                  "mix_one: views must share dimensions and channels");
  detail::require(first_label.size() == partner_label.size(), "mix_one: label lengths differ");
  MixedSample out;
  out.mask = plan_mask(plan, first_view.dims(), generators, merge_mode);
  out.lambda_merged = merged_lambda(out.mask);
  out.image = apply_mask(out.mask, first_view, partner_view);
  out.label = blend_labels(out.lambda_merged, first_label, partner_label);
  out.plan = std::move(plan);
  return out;
}

/// Mix two prepared views with draws from `sample`.
inline MixedSample mix_one(const Image& first_view, const SoftLabel& first_label,
                           const Image& partner_view, const SoftLabel& partner_label,
                           const MiamixConfig& cfg, const RngStream& sample) {
  detail::require(first_view.dims() == partner_view.dims() &&
                      first_view.channels() == partner_view.channels(),
                  "mix_one: views must share dimensions and channels");
  MixPlan plan = draw_plan(cfg, first_view.dims(), sample);
  return execute_plan(std::move(plan), first_view, first_label, partner_view, partner_label,
                      cfg.generators, cfg.merge_mode);
}

// ---------------------------------------------------------------------------
// Batch

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first
/// exception thrown by any call is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> threads;
    const auto count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    threads.reserve(count);
    for (unsigned t = 0; t < count; ++t) {
      threads.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(n);
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

struct BatchOptions {
  std::uint64_t batch_index = 0;   // keys the pairing stream
  std::uint64_t stream_offset = 0; // stream id of the batch's first sample
  unsigned workers = 1;
};

inline std::vector<MixedSample> mix_batch(std::span<const Image> images,
                                          std::span<const SoftLabel> labels,
                                          const MiamixConfig& cfg, const BatchOptions& options = {}) {
  validate(cfg);
  detail::require(!images.empty(), "mix_batch: batch must not be empty");
  detail::require(images.size() == labels.size(), "mix_batch: images and labels differ in length");
  for (std::size_t i = 0; i < images.size(); ++i) {
    detail::require(images[i].dims() == images.front().dims() &&
                        images[i].channels() == images.front().channels(),
                    "mix_batch: image " + std::to_string(i) + " differs in shape from image 0");
    detail::require(labels[i].size() == labels.front().size(),
                    "mix_batch: label " + std::to_string(i) + " differs in length from label 0");
  }
  const std::size_t n = images.size();
  RngStream pairing_rng(cfg.seed, options.batch_index, Purpose::Pairing);
  const auto pairs = pair_samples(n, cfg.p_self, pairing_rng, cfg.pairing);

  std::vector<Image> first_views(n);
  std::vector<Image> partner_views(n);
  std::vector<ViewOps> first_ops(n);
  std::vector<ViewOps> partner_ops(n);
  parallel_for(n, options.workers, [&](std::size_t i) {
    const RngStream sample(cfg.seed, options.stream_offset + i);
    RngStream first_rng = sample.substream(Purpose::FirstView);
    first_ops[i] = draw_view_ops(cfg.view_aug, first_rng);
    first_views[i] = apply_view_ops(images[i], first_ops[i]);
    RngStream partner_rng = sample.substream(Purpose::PartnerView);
    partner_ops[i] = draw_view_ops(cfg.view_aug, partner_rng);
    partner_views[i] = apply_view_ops(images[i], partner_ops[i]);
  });

  std::vector<MixedSample> out(n);
  parallel_for(n, options.workers, [&](std::size_t i) {
    const std::size_t j = pairs[i].partner;
    const RngStream sample(cfg.seed, options.stream_offset + i);
    MixPlan plan = draw_plan(cfg, images[i].dims(), sample);
    plan.index_first = i;
    plan.index_partner = j;
    plan.is_self_mix = pairs[i].is_self_mix;
    plan.partner_stream_id = options.stream_offset + j;
    plan.first_view = first_ops[i];
    plan.partner_view = partner_ops[j];
    out[i] = execute_plan(std::move(plan), first_views[i], labels[i], partner_views[j], labels[j],
                          cfg.generators, cfg.merge_mode);
  });
  return out;
}

}  // namespace miamix
