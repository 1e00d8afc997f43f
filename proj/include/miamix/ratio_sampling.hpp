#pragma once

// Layer count, method and mixing-ratio draws for one mixed sample.

#include <array>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "miamix/errors.hpp"
#include "miamix/generators.hpp"
#include "miamix/rng.hpp"

namespace miamix {

using MethodWeights = std::array<double, kNumGeneratorKinds>;

/// k ratios plus the residual (k+1)-th Dirichlet component.
struct RatioDraw {
  int k = 0;
  std::vector<double> lambdas;
  double residual = 0.0;
};

struct MethodDraw {
  std::vector<GeneratorKind> methods;
};

/// Uniform over the listed layer counts.
inline int sample_layer_count(std::span<const int> k_choices, RngStream& rng) {
  detail::require<ConfigError>(!k_choices.empty(), "layer-count choices must not be empty");
  for (int k : k_choices) {
    detail::require<ConfigError>(k >= 1, "layer counts must be positive");
  }
  return k_choices[rng.uniform_index(k_choices.size())];
}

inline void validate_method_weights(const MethodWeights& weights) {
  double total = 0.0;
  for (double w : weights) {
    detail::require<ConfigError>(w >= 0.0 && std::isfinite(w),
                                 "method weights must be non-negative and finite");
    total += w;
  }
  detail::require<ConfigError>(total > 0.0, "method weights must not all be zero");
}

/// k independent categorical draws over the candidates with probabilities
/// proportional to `weights`. Zero-weight methods are never drawn.
inline MethodDraw sample_methods(int k, const MethodWeights& weights, RngStream& rng) {
  detail::require(k >= 1, "sample_methods: k must be at least 1");
  validate_method_weights(weights);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  MethodDraw draw;
  draw.methods.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double target = rng.uniform() * total;
    double running = 0.0;
    std::size_t chosen = kNumGeneratorKinds;
    for (std::size_t m = 0; m < kNumGeneratorKinds; ++m) {
      if (weights[m] <= 0.0) continue;
      running += weights[m];
      chosen = m;
      if (target < running) break;
    }
    draw.methods.push_back(kAllGeneratorKinds[chosen]);
  }
  return draw;
}

/// Dirichlet(alpha, ..., alpha, k * alpha) via normalized Gamma(shape, 1)
/// draws. The first k components are the layer ratios, the last the residual.
inline RatioDraw sample_lambdas(int k, double alpha, RngStream& rng) {
  detail::require<ConfigError>(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
  detail::require<ConfigError>(k >= 1, "layer count must be at least 1");
  std::vector<double> gammas(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i < k; ++i) gammas[static_cast<std::size_t>(i)] = rng.gamma(alpha);
  gammas.back() = rng.gamma(static_cast<double>(k) * alpha);
  const double total = std::accumulate(gammas.begin(), gammas.end(), 0.0);
  RatioDraw draw;
  draw.k = k;
  draw.lambdas.resize(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double v = total > 0.0 ? gammas[static_cast<std::size_t>(i)] / total : 0.0;
    draw.lambdas[static_cast<std::size_t>(i)] = v;
    sum += v;
  }
  // Residual closes the simplex so the components sum to one to rounding.
  draw.residual = std::max(0.0, 1.0 - sum);
  return draw;
}

/// Beta(alpha, alpha), the k = 1 case of sample_lambdas.
inline double sample_beta(double alpha, RngStream& rng) {
  detail::require<ConfigError>(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
  const double x = rng.gamma(alpha);
  const double y = rng.gamma(alpha);
  const double total = x + y;
  return total > 0.0 ? x / total : 0.5;
}

}  // namespace miamix
