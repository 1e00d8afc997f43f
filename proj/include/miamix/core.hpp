#pragma once

// Images, soft labels, mixing masks and the two elementary blends.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "miamix/errors.hpp"

namespace miamix {

/// Spatial extent shared by an image and its mask.
struct Dims {
  int height = 0;
  int width = 0;

  std::size_t pixels() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

inline std::string to_string(Dims d) {
  return std::to_string(d.height) + "x" + std::to_string(d.width);
}

/// H x W x C image, row-major interleaved, values in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, float fill = 0.0f)
      : dims_{height, width}, channels_(channels) {
    detail::require(height > 0 && width > 0, "Image: dimensions must be positive");
    detail::require(channels == 1 || channels == 3, "Image: channels must be 1 or 3");
    data_.assign(dims_.pixels() * static_cast<std::size_t>(channels), fill);
  }
  Image(int height, int width, int channels, std::vector<float> data)
      : dims_{height, width}, channels_(channels), data_(std::move(data)) {
    detail::require(height > 0 && width > 0, "Image: dimensions must be positive");
    detail::require(channels == 1 || channels == 3, "Image: channels must be 1 or 3");
    detail::require(data_.size() == dims_.pixels() * static_cast<std::size_t>(channels),
                    "Image: data length does not match height*width*channels");
    for (float v : data_) {
      detail::require(v >= 0.0f && v <= 1.0f, "Image: values must lie in [0,1]");
    }
  }

  int height() const noexcept { return dims_.height; }
  int width() const noexcept { return dims_.width; }
  int channels() const noexcept { return channels_; }
  Dims dims() const noexcept { return dims_; }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int row, int col, int channel) noexcept {
    return data_[index(row, col, channel)];
  }
  float at(int row, int col, int channel) const noexcept {
    return data_[index(row, col, channel)];
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int row, int col, int channel) const noexcept {
    return (static_cast<std::size_t>(row) * dims_.width + col) * channels_ + channel;
  }

  Dims dims_{};
  int channels_ = 0;
  std::vector<float> data_;
};

/// Probability vector over L classes.
class SoftLabel {
 public:
  SoftLabel() = default;
  explicit SoftLabel(std::vector<double> probs) : probs_(std::move(probs)) {
    detail::require(!probs_.empty(), "SoftLabel: needs at least one class");
    double sum = 0.0;
    for (double p : probs_) {
      detail::require(p >= 0.0, "SoftLabel: probabilities must be non-negative");
      sum += p;
    }
    detail::require(std::abs(sum - 1.0) <= 1e-6, "SoftLabel: probabilities must sum to 1");
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }

  friend bool operator==(const SoftLabel&, const SoftLabel&) = default;

 private:
  std::vector<double> probs_;
};

/// Per-pixel weight of the first image, H x W, values in [0, 1].
class MixMask {
 public:
  MixMask() = default;
  MixMask(Dims dims, double fill) : dims_(dims) {
    detail::require(dims.height > 0 && dims.width > 0, "MixMask: dimensions must be positive");
    detail::require(fill >= 0.0 && fill <= 1.0, "MixMask: fill must lie in [0,1]");
    data_.assign(dims.pixels(), fill);
  }
  MixMask(Dims dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {
    detail::require(dims.height > 0 && dims.width > 0, "MixMask: dimensions must be positive");
    detail::require(data_.size() == dims.pixels(), "MixMask: data length does not match dims");
    for (double v : data_) {
      detail::require(v >= 0.0 && v <= 1.0, "MixMask: values must lie in [0,1]");
    }
  }

  Dims dims() const noexcept { return dims_; }
  int height() const noexcept { return dims_.height; }
  int width() const noexcept { return dims_.width; }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int row, int col) noexcept {
    return data_[static_cast<std::size_t>(row) * dims_.width + col];
  }
  double at(int row, int col) const noexcept {
    return data_[static_cast<std::size_t>(row) * dims_.width + col];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const MixMask&, const MixMask&) = default;

 private:
  Dims dims_{};
  std::vector<double> data_;
};

inline SoftLabel make_one_hot(std::size_t class_index, std::size_t num_classes) {
  detail::require(num_classes >= 1, "make_one_hot: num_classes must be at least 1");
  detail::require(class_index < num_classes,
                  "make_one_hot: class index " + std::to_string(class_index) +
                      " out of range for " + std::to_string(num_classes) + " classes");
  std::vector<double> probs(num_classes, 0.0);
  probs[class_index] = 1.0;
  return SoftLabel(std::move(probs));
}

/// Mean of all mask elements, accumulated in double.
///
/// Summation is shifted by the first element and compensated (Neumaier), so a
/// constant mask returns its value exactly and 1 - mask agrees with
/// 1 - mean(mask) to rounding.
inline double mask_mean(const MixMask& mask) {
  detail::require(!mask.empty(), "mask_mean: empty mask");
  const auto values = mask.data();
  const double shift = values.front();
  double sum = 0.0;
  double compensation = 0.0;
  for (double v : values) {
    const double term = v - shift;
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) {
      compensation += (sum - t) + term;
    } else {
      compensation += (term - t) + sum;
    }
    sum = t;
  }
  const double mean = shift + (sum + compensation) / static_cast<double>(values.size());
  return std::clamp(mean, 0.0, 1.0);
}

/// out = mask * first + (1 - mask) * second, mask broadcast over channels.
inline Image apply_mask(const MixMask& mask, const Image& first, const Image& second) {
  detail::require(first.dims() == second.dims() && first.dims() == mask.dims(),
                  "apply_mask: spatial dimensions differ (mask " + to_string(mask.dims()) +
                      ", first " + to_string(first.dims()) + ", second " +
                      to_string(second.dims()) + ")");
  detail::require(first.channels() == second.channels(), "apply_mask: channel counts differ");
  const int channels = first.channels();
  Image out(first.height(), first.width(), channels);
  const auto m = mask.data();
  const auto a = first.data();
  const auto b = second.data();
  auto o = out.data();
  for (std::size_t p = 0; p < m.size(); ++p) {
    const double w = m[p];
    const double rest = 1.0 - w;
    for (int c = 0; c < channels; ++c) {
      const std::size_t i = p * channels + c;
      o[i] = static_cast<float>(w * a[i] + rest * b[i]);
    }
  }
  return out;
}

/// lambda * first + (1 - lambda) * second. Classes where both inputs agree
/// are copied through, so blending a label with itself is exact.
inline SoftLabel blend_labels(double lambda, const SoftLabel& first, const SoftLabel& second) {
  detail::require(first.size() == second.size(), "blend_labels: label lengths differ");
  detail::require(lambda >= 0.0 && lambda <= 1.0, "blend_labels: lambda must lie in [0,1]");
  std::vector<double> out(first.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = first[i] == second[i] ? first[i]
                                   : lambda * first[i] + (1.0 - lambda) * second[i];
  }
  return SoftLabel(std::move(out));
}

}  // namespace miamix
