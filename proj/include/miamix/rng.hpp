#pragma once

// Counter-based random streams.
//
// Every draw in the engine comes from a Philox4x32-10 block cipher keyed by
// the global seed. The 128-bit counter carries the stream id (one per
// sample), a purpose tag (what the draws are for) and a block index, so any
// (seed, stream, purpose) triple maps to a fixed sequence no matter which
// thread evaluates it or in what order.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "miamix/errors.hpp"

namespace miamix {

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter apply(Counter ctr, Key key) noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

/// What a substream's draws are used for. Values are part of the
/// reproducibility contract: never renumber, only append.
enum class Purpose : std::uint16_t {
  Root = 0,
  Pairing = 1,
  FirstView = 2,
  PartnerView = 3,
  LayerCount = 4,
  Methods = 5,
  Lambdas = 6,
  MaskShape = 7,
  MaskAugment = 8,
  Stats = 9,
  Synthetic = 10,
};

/// A deterministic stream of random draws identified by (seed, stream_id,
/// purpose, index). Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id,
            Purpose purpose = Purpose::Root, std::uint16_t index = 0) noexcept
      : seed_(seed), stream_id_(stream_id), purpose_(purpose), index_(index) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  Purpose purpose() const noexcept { return purpose_; }
  std::uint16_t index() const noexcept { return index_; }

  /// Independent stream for another purpose of the same sample. The result
  /// starts fresh regardless of how many draws this stream has made.
  RngStream substream(Purpose purpose, std::uint16_t index = 0) const noexcept {
    return RngStream(seed_, stream_id_, purpose, index);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    if (buffered_ == 0) refill();
    return buffer_[--buffered_];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Unbiased integer on [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t uniform_index(std::uint64_t n) {
    detail::require(n > 0, "uniform_index: empty range");
    __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<__uint128_t>(next_u64()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Standard normal, Marsaglia polar method. The spare variate is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

  /// Gamma(shape, scale = 1), Marsaglia-Tsang squeeze. Shapes below one use
  /// the boost Gamma(a) = Gamma(a + 1) * U^(1/a).
  double gamma(double shape) {
    detail::require(shape > 0.0 && std::isfinite(shape),
                    "gamma: shape must be positive and finite");
    if (shape < 1.0) {
      const double boost = std::pow(uniform_open(), 1.0 / shape);
      return gamma(shape + 1.0) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  void refill() noexcept {
    const Philox4x32::Counter ctr = {
        block_++,
        (static_cast<std::uint32_t>(purpose_) << 16) | index_,
        static_cast<std::uint32_t>(stream_id_),
        static_cast<std::uint32_t>(stream_id_ >> 32)};
    const Philox4x32::Key key = {static_cast<std::uint32_t>(seed_),
                                 static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = Philox4x32::apply(ctr, key);
    buffer_[1] = (std::uint64_t{out[1]} << 32) | out[0];
    buffer_[0] = (std::uint64_t{out[3]} << 32) | out[2];
    buffered_ = 2;
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  Purpose purpose_;
  std::uint16_t index_;
  std::uint32_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace miamix
