#pragma once

// Flat "key = value" config text. Keys are the long CLI flag names without
// the leading dashes; '#' starts a comment. format_config() output parses
// back to the same MiamixConfig.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "miamix/errors.hpp"
#include "miamix/pipeline.hpp"

namespace miamix {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::string format_double(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

template <typename T>
T parse_number(std::string_view text, std::string_view key) {
  text = trim(text);
  T value{};
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

inline std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> items;
  text = trim(text);
  if (text.empty()) return items;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    items.push_back(trim(text.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

template <typename T>
std::vector<T> parse_number_list(std::string_view text, std::string_view key) {
  std::vector<T> out;
  for (auto item : split_list(text)) out.push_back(parse_number<T>(item, key));
  return out;
}

inline bool parse_bool(std::string_view text, std::string_view key) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  throw ConfigError("invalid boolean '" + std::string(text) + "' for " + std::string(key));
}

template <typename T, typename Format>
std::string join(const std::vector<T>& items, Format format) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += format(items[i]);
  }
  return out;
}

}  // namespace detail

inline MethodWeights parse_method_weights(std::string_view text) {
  const auto values = detail::parse_number_list<double>(text, "weights");
  detail::require<ConfigError>(values.size() == kNumGeneratorKinds,
                               "weights needs 5 values in order Mixup,CutMix,FMix,GridMix,AGMix");
  MethodWeights weights{};
  std::copy(values.begin(), values.end(), weights.begin());
  return weights;
}

inline std::string_view to_string(PartnerSampling sampling) noexcept {
  return sampling == PartnerSampling::Permutation ? "permutation" : "replacement";
}

inline PartnerSampling parse_partner_sampling(std::string_view text) {
  if (text == "permutation") return PartnerSampling::Permutation;
  if (text == "replacement") return PartnerSampling::WithReplacement;
  throw ConfigError("unknown pairing '" + std::string(text) + "' (expected permutation or replacement)");
}

/// Apply one key/value to cfg. Throws ConfigError on unknown keys or bad
/// values.
inline void set_config_value(MiamixConfig& cfg, std::string_view key, std::string_view value) {
  using detail::parse_number;
  using detail::parse_number_list;
  value = detail::trim(value);
  if (key == "alpha") {
    cfg.alpha = parse_number<double>(value, key);
  } else if (key == "k") {
    cfg.k_choices = parse_number_list<int>(value, key);
  } else if (key == "weights") {
    cfg.method_weights = parse_method_weights(value);
  } else if (key == "p-self") {
    cfg.p_self = parse_number<double>(value, key);
  } else if (key == "p-aug") {
    cfg.mask_aug.p_aug = parse_number<double>(value, key);
  } else if (key == "p-smooth") {
    cfg.mask_aug.p_smooth = parse_number<double>(value, key);
  } else if (key == "smooth-windows") {
    cfg.mask_aug.smooth_windows = parse_number_list<int>(value, key);
  } else if (key == "max-rotate") {
    cfg.mask_aug.max_rotate = parse_number<double>(value, key);
  } else if (key == "max-shear") {
    cfg.mask_aug.max_shear = parse_number<double>(value, key);
  } else if (key == "eligible") {
    cfg.mask_aug.eligible.clear();
    for (auto name : detail::split_list(value)) {
      try {
        cfg.mask_aug.eligible.push_back(parse_generator_kind(name));
      } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
      }
    }
  } else if (key == "merge") {
    cfg.merge_mode = parse_merge_mode(value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(value, key);
  } else if (key == "view-aug") {
    cfg.view_aug.enabled = detail::parse_bool(value, key);
  } else if (key == "hflip-p") {
    cfg.view_aug.hflip_p = parse_number<double>(value, key);
  } else if (key == "crop-padding") {
    cfg.view_aug.crop_padding = parse_number<int>(value, key);
  } else if (key == "fmix-decay") {
    cfg.generators.fmix_decay = parse_number<double>(value, key);
  } else if (key == "grid-min") {
    cfg.generators.grid_min = parse_number<int>(value, key);
  } else if (key == "grid-max") {
    cfg.generators.grid_max = parse_number<int>(value, key);
  } else if (key == "pairing") {
    cfg.pairing = parse_partner_sampling(value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

inline std::string format_config(const MiamixConfig& cfg) {
  using detail::format_double;
  std::vector<double> weights(cfg.method_weights.begin(), cfg.method_weights.end());
  auto int_text = [](int v) { return std::to_string(v); };
  std::ostringstream out;
  out << "alpha = " << format_double(cfg.alpha) << '\n'
      << "k = " << detail::join(cfg.k_choices, int_text) << '\n'
      << "weights = " << detail::join(weights, format_double) << '\n'
      << "p-self = " << format_double(cfg.p_self) << '\n'
      << "p-aug = " << format_double(cfg.mask_aug.p_aug) << '\n'
      << "p-smooth = " << format_double(cfg.mask_aug.p_smooth) << '\n'
      << "merge = " << to_string(cfg.merge_mode) << '\n'
      << "seed = " << cfg.seed << '\n'
      << "smooth-windows = " << detail::join(cfg.mask_aug.smooth_windows, int_text) << '\n'
      << "max-rotate = " << format_double(cfg.mask_aug.max_rotate) << '\n'
      << "max-shear = " << format_double(cfg.mask_aug.max_shear) << '\n'
      << "eligible = "
      << detail::join(cfg.mask_aug.eligible, [](GeneratorKind k) { return std::string(to_string(k)); })
      << '\n'
      << "view-aug = " << (cfg.view_aug.enabled ? "true" : "false") << '\n'
      << "hflip-p = " << format_double(cfg.view_aug.hflip_p) << '\n'
      << "crop-padding = " << cfg.view_aug.crop_padding << '\n'
      << "fmix-decay = " << format_double(cfg.generators.fmix_decay) << '\n'
      << "grid-min = " << cfg.generators.grid_min << '\n'
      << "grid-max = " << cfg.generators.grid_max << '\n'
      << "pairing = " << to_string(cfg.pairing) << '\n';
  return out.str();
}

/// Parse config text over `base`. Line numbers appear in error messages.
inline MiamixConfig parse_config(std::string_view text, MiamixConfig base = {}) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line =
        text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
      }
      try {
        set_config_value(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
      } catch (const ConfigError& e) {
        throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return base;
}

inline MiamixConfig load_config_file(const std::string& path, MiamixConfig base = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base));
}

}  // namespace miamix
