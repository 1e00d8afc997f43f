#pragma once

// Mask generators for the five mixing methods.
//
// Orientation: a generator receives lambda, the intended share of the
// incoming (second) image, and returns a keep-mask whose mean is 1 - lambda
// exactly (MixUp, FMix), up to border clipping (CutMix), up to one cell
// (GridMix), or which falls monotonically with lambda (Gaussian).

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "miamix/core.hpp"
#include "miamix/errors.hpp"
#include "miamix/rng.hpp"

namespace miamix {

enum class GeneratorKind : std::uint8_t { Mixup = 0, CutMix = 1, FMix = 2, GridMix = 3, AGMix = 4 };

inline constexpr std::size_t kNumGeneratorKinds = 5;

/// Candidate order used by method weights everywhere.
inline constexpr std::array<GeneratorKind, kNumGeneratorKinds> kAllGeneratorKinds = {
    GeneratorKind::Mixup, GeneratorKind::CutMix, GeneratorKind::FMix, GeneratorKind::GridMix,
    GeneratorKind::AGMix};

inline constexpr std::string_view to_string(GeneratorKind kind) noexcept {
  switch (kind) {
    case GeneratorKind::Mixup: return "Mixup";
    case GeneratorKind::CutMix: return "CutMix";
    case GeneratorKind::FMix: return "FMix";
    case GeneratorKind::GridMix: return "GridMix";
    case GeneratorKind::AGMix: return "AGMix";
  }
  return "unknown";
}

inline GeneratorKind parse_generator_kind(std::string_view name) {
  for (GeneratorKind kind : kAllGeneratorKinds) {
    std::string_view canonical = to_string(kind);
    if (name.size() == canonical.size() &&
        std::equal(name.begin(), name.end(), canonical.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) ==
                 std::tolower(static_cast<unsigned char>(b));
        })) {
      return kind;
    }
  }
  throw ArgumentError("unknown mixing method '" + std::string(name) + "'");
}

inline std::size_t kind_index(GeneratorKind kind) {
  const auto i = static_cast<std::size_t>(kind);
  detail::require(i < kNumGeneratorKinds, "unknown generator kind");
  return i;
}

/// Shape parameters of a Gaussian mask.
struct GaussianMaskParams {
  double center_row = 0.0;
  double center_col = 0.0;
  double sigma = 1.0;
  double q = 0.0;      // off-diagonal of the unit-diagonal kernel covariance
  double theta = 0.0;  // kernel rotation, radians
};

/// Knobs of the generators that are not drawn per mask.
struct GeneratorParams {
  double fmix_decay = 3.0;
  int grid_min = 2;
  int grid_max = 8;
};

namespace detail {

inline void check_lambda(double lambda, const char* who) {
  require(lambda >= 0.0 && lambda <= 1.0, std::string(who) + ": lambda must lie in [0,1]");
}

inline void check_dims(Dims dims, const char* who) {
  require(dims.height > 0 && dims.width > 0, std::string(who) + ": dimensions must be positive");
}

/// Process-wide cache of complex-to-real inverse FFT plans. Planning is
/// serialized; execution through the new-array interface is thread-safe.
class InverseFftPlans {
 public:
  static InverseFftPlans& instance() {
    static InverseFftPlans plans;
    return plans;
  }

  fftw_plan get(Dims dims) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(dims.height, dims.width);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const std::size_t half = static_cast<std::size_t>(dims.width / 2 + 1);
    auto* in = fftw_alloc_complex(static_cast<std::size_t>(dims.height) * half);
    auto* out = fftw_alloc_real(dims.pixels());
    fftw_plan plan =
        fftw_plan_dft_c2r_2d(dims.height, dims.width, in, out, FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
    fftw_free(in);
    fftw_free(out);
    require<InvariantError>(plan != nullptr, "FFTW failed to plan " + to_string(dims));
    plans_.emplace(key, plan);
    return plan;
  }

  InverseFftPlans(const InverseFftPlans&) = delete;
  InverseFftPlans& operator=(const InverseFftPlans&) = delete;

 private:
  InverseFftPlans() = default;
  ~InverseFftPlans() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

/// FFT sample frequency (cycles per sample) of bin i in an n-point transform.
inline double fft_frequency(int i, int n) {
  const int signed_bin = (i <= (n - 1) / 2) ? i : i - n;
  return static_cast<double>(signed_bin) / n;
}

/// 1 / max(f, 1/max(H,W))^decay per half-spectrum bin, cached per thread.
inline const std::vector<double>& spectrum_scale(Dims dims, double decay_power) {
  thread_local std::map<std::tuple<int, int, double>, std::vector<double>> cache;
  auto [it, inserted] = cache.try_emplace({dims.height, dims.width, decay_power});
  if (!inserted) return it->second;
  const int half = dims.width / 2 + 1;
  const double floor_freq = 1.0 / std::max(dims.height, dims.width);
  std::vector<double>& scale = it->second;
  scale.resize(static_cast<std::size_t>(dims.height) * half);
  for (int r = 0; r < dims.height; ++r) {
    const double fy = fft_frequency(r, dims.height);
    for (int c = 0; c < half; ++c) {
      const double fx = static_cast<double>(c) / dims.width;
      const double freq = std::max(std::sqrt(fx * fx + fy * fy), floor_freq);
      scale[static_cast<std::size_t>(r) * half + c] = 1.0 / std::pow(freq, decay_power);
    }
  }
  return scale;
}

/// Sets exactly `ones` elements of `field` to 1 (the largest values, ties to
/// the lower row-major index) and the rest to 0.
inline std::vector<double> threshold_top(std::span<const double> field, std::size_t ones) {
  std::vector<double> out(field.size(), 0.0);
  if (ones == 0) return out;
  if (ones >= field.size()) {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  std::vector<std::uint32_t> order(field.size());
  std::iota(order.begin(), order.end(), 0u);
  auto before = [&](std::uint32_t a, std::uint32_t b) {
    if (field[a] != field[b]) return field[a] > field[b];
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(ones), order.end(),
                   before);
  for (std::size_t i = 0; i < ones; ++i) out[order[i]] = 1.0;
  return out;
}

}  // namespace detail

inline MixMask gen_constant_mask(double lambda, Dims dims) {
  detail::check_lambda(lambda, "gen_constant_mask");
  detail::check_dims(dims, "gen_constant_mask");
  return MixMask(dims, 1.0 - lambda);
}

/// Zero rectangle with sides round(W*sqrt(lambda)) x round(H*sqrt(lambda))
/// centered at (center_row, center_col), clipped to the image. A side equal
/// to the full extent spans the whole axis.
inline MixMask cutmix_mask_at(double lambda, Dims dims, int center_row, int center_col) {
  detail::check_lambda(lambda, "gen_cutmix_mask");
  detail::check_dims(dims, "gen_cutmix_mask");
  const double side = std::sqrt(lambda);
  const int cut_h = static_cast<int>(std::lround(dims.height * side));
  const int cut_w = static_cast<int>(std::lround(dims.width * side));
  auto span = [](int cut, int center, int extent) -> std::pair<int, int> {
    if (cut >= extent) return {0, extent};
    const int lo = center - cut / 2;
    return {std::clamp(lo, 0, extent), std::clamp(lo + cut, 0, extent)};
  };
  const auto [r0, r1] = span(cut_h, center_row, dims.height);
  const auto [c0, c1] = span(cut_w, center_col, dims.width);
  MixMask mask(dims, 1.0);
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) mask.at(r, c) = 0.0;
  }
  return mask;
}

inline MixMask gen_cutmix_mask(double lambda, Dims dims, RngStream& rng) {
  detail::check_dims(dims, "gen_cutmix_mask");
  const int row = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(dims.height)));
  const int col = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(dims.width)));
  return cutmix_mask_at(lambda, dims, row, col);
}

/// Real low-frequency noise field: complex Gaussian half-spectrum attenuated
/// by 1 / max(f, 1/max(H,W))^decay, transformed back to the image plane.
inline std::vector<double> fourier_noise(Dims dims, RngStream& rng, double decay_power) {
  detail::check_dims(dims, "fourier_noise");
  detail::require(decay_power > 0.0, "fourier noise: decay power must be positive");
  const int half = dims.width / 2 + 1;
  const std::size_t bins = static_cast<std::size_t>(dims.height) * half;
  std::unique_ptr<fftw_complex[], detail::FftwFree> spectrum(fftw_alloc_complex(bins));
  std::unique_ptr<double[], detail::FftwFree> field(fftw_alloc_real(dims.pixels()));
  const std::vector<double>& scale = detail::spectrum_scale(dims, decay_power);
  for (std::size_t i = 0; i < bins; ++i) {
    spectrum[i][0] = rng.normal() * scale[i];
    spectrum[i][1] = rng.normal() * scale[i];
  }
  fftw_execute_dft_c2r(detail::InverseFftPlans::instance().get(dims), spectrum.get(), field.get());
  return std::vector<double>(field.get(), field.get() + dims.pixels());
}

/// Binary mask from thresholded Fourier noise with exactly
/// round((1 - lambda) * H * W) ones.
inline MixMask gen_fmix_mask(double lambda, Dims dims, RngStream& rng, double decay_power = 3.0) {
  detail::check_lambda(lambda, "gen_fmix_mask");
  const std::vector<double> field = fourier_noise(dims, rng, decay_power);
  const auto ones = static_cast<std::size_t>(
      std::llround((1.0 - lambda) * static_cast<double>(dims.pixels())));
  return MixMask(dims, detail::threshold_top(field, ones));
}

/// n x n grid whose first round(lambda * n^2) cells in `cell_order` are
/// zero. Cell (i, j) spans rows [i*H/n, (i+1)*H/n) and the same for columns.
inline MixMask gridmix_mask_from_order(double lambda, Dims dims, int n,
                                       std::span<const std::uint32_t> cell_order) {
  detail::check_lambda(lambda, "gen_gridmix_mask");
  detail::check_dims(dims, "gen_gridmix_mask");
  detail::require(n >= 1 && cell_order.size() == static_cast<std::size_t>(n) * n,
                  "gen_gridmix_mask: cell order must cover n*n cells");
  const auto zero_cells = static_cast<std::size_t>(std::llround(lambda * n * n));
  MixMask mask(dims, 1.0);
  for (std::size_t i = 0; i < zero_cells; ++i) {
    const int cell = static_cast<int>(cell_order[i]);
    const int gr = cell / n;
    const int gc = cell % n;
    const int r0 = static_cast<int>(static_cast<long long>(gr) * dims.height / n);
    const int r1 = static_cast<int>(static_cast<long long>(gr + 1) * dims.height / n);
    const int c0 = static_cast<int>(static_cast<long long>(gc) * dims.width / n);
    const int c1 = static_cast<int>(static_cast<long long>(gc + 1) * dims.width / n);
    for (int r = r0; r < r1; ++r) {
      for (int c = c0; c < c1; ++c) mask.at(r, c) = 0.0;
    }
  }
  return mask;
}

/// Grid size n drawn uniformly from [grid_min, grid_max], then exactly
/// round(lambda * n^2) cells chosen without replacement are zeroed.
inline MixMask gen_gridmix_mask(double lambda, Dims dims, RngStream& rng, int grid_min = 2,
                                int grid_max = 8) {
  detail::require(grid_min >= 1 && grid_min <= grid_max,
                  "gen_gridmix_mask: grid range must satisfy 1 <= min <= max");
  const int n = grid_min + static_cast<int>(rng.uniform_index(
                               static_cast<std::uint64_t>(grid_max - grid_min + 1)));
  std::vector<std::uint32_t> order(static_cast<std::size_t>(n) * n);
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  return gridmix_mask_from_order(lambda, dims, n, order);
}

/// mask(p) = 1 - exp(-0.5 * d^T C^-1 d), d = p - c, C = sigma^2 R S R^T with
/// S = [[1, q], [q, 1]] and R the rotation by theta. Coordinates are
/// (col, row) = (x, y).
inline MixMask gaussian_mask(Dims dims, const GaussianMaskParams& params) {
  detail::check_dims(dims, "gen_gaussian_mask");
  detail::require(std::abs(params.q) < 1.0, "gen_gaussian_mask: |q| must be below 1");
  detail::require(params.sigma > 0.0, "gen_gaussian_mask: sigma must be positive");
  const double cs = std::cos(params.theta);
  const double sn = std::sin(params.theta);
  // R S R^T for symmetric S = [[1, q], [q, 1]].
  const double sxx = 1.0 - 2.0 * params.q * sn * cs;
  const double syy = 1.0 + 2.0 * params.q * sn * cs;
  const double sxy = params.q * (cs * cs - sn * sn);
  const double det = sxx * syy - sxy * sxy;  // = 1 - q^2
  const double s2 = params.sigma * params.sigma;
  const double ixx = syy / (det * s2);
  const double iyy = sxx / (det * s2);
  const double ixy = -sxy / (det * s2);
  std::vector<double> data(dims.pixels());
  for (int r = 0; r < dims.height; ++r) {
    const double dy = r - params.center_row;
    for (int c = 0; c < dims.width; ++c) {
      const double dx = c - params.center_col;
      const double quad = ixx * dx * dx + 2.0 * ixy * dx * dy + iyy * dy * dy;
      data[static_cast<std::size_t>(r) * dims.width + c] = 1.0 - std::exp(-0.5 * quad);
    }
  }
  return MixMask(dims, std::move(data));
}

/// sigma = sqrt(lambda) * sqrt(H * W); lambda = 0 gives the all-ones limit.
inline double gaussian_sigma(double lambda, Dims dims) {
  return std::sqrt(lambda) * std::sqrt(static_cast<double>(dims.pixels()));
}

/// Gaussian mask with a uniformly drawn integer center. q = 0, theta = 0
/// is the isotropic GMix mask.
inline MixMask gen_gaussian_mask(double lambda, Dims dims, RngStream& rng, double q,
                                 double theta) {
  detail::check_lambda(lambda, "gen_gaussian_mask");
  detail::check_dims(dims, "gen_gaussian_mask");
  detail::require(std::abs(q) < 1.0, "gen_gaussian_mask: |q| must be below 1");
  GaussianMaskParams params;
  params.center_row = static_cast<double>(rng.uniform_index(static_cast<std::uint64_t>(dims.height)));
  params.center_col = static_cast<double>(rng.uniform_index(static_cast<std::uint64_t>(dims.width)));
  params.q = q;
  params.theta = theta;
  if (lambda == 0.0) return MixMask(dims, 1.0);
  params.sigma = gaussian_sigma(lambda, dims);
  return gaussian_mask(dims, params);
}

/// Dispatch on kind, drawing shape parameters from rng. AGMix draws
/// q ~ U(-1, 1) and theta ~ U[0, pi), then the center.
inline MixMask generate(GeneratorKind kind, double lambda, Dims dims, RngStream& rng,
                        const GeneratorParams& params = {}) {
  detail::check_lambda(lambda, "generate");
  switch (kind) {
    case GeneratorKind::Mixup: return gen_constant_mask(lambda, dims);
    case GeneratorKind::CutMix: return gen_cutmix_mask(lambda, dims, rng);
    case GeneratorKind::FMix: return gen_fmix_mask(lambda, dims, rng, params.fmix_decay);
    case GeneratorKind::GridMix:
      return gen_gridmix_mask(lambda, dims, rng, params.grid_min, params.grid_max);
    case GeneratorKind::AGMix: {
      double q;
      do {
        q = -1.0 + 2.0 * rng.uniform();
      } while (q == -1.0);
      const double theta = std::numbers::pi * rng.uniform();
      return gen_gaussian_mask(lambda, dims, rng, q, theta);
    }
  }
  throw ArgumentError("generate: unknown generator kind");
}

}  // namespace miamix
