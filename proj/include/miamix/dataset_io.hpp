#pragma once

// Manifest ingest, image codecs (8-bit PNG via libpng, binary PGM/PPM) and
// the mixlog.jsonl audit trail, including a replayer that rebuilds an output
// image from its log record and the source files alone.

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "miamix/core.hpp"
#include "miamix/errors.hpp"
#include "miamix/pipeline.hpp"

namespace miamix {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
  std::string path;
  std::size_t class_index = 0;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::size_t num_classes = 0;
};

/// One JSON object per line: an optional {"num_classes": N} header followed
/// by {"path": "...", "label": i} records. Relative paths resolve against
/// the manifest's directory. Blank lines are ignored.
inline Manifest parse_manifest(std::istream& in, const fs::path& base_dir = {}) {
  Manifest manifest;
  std::optional<std::size_t> declared;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = [&] { return "manifest line " + std::to_string(line_no) + ": "; };
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where() + "malformed JSON (" + e.what() + ")");
    }
    if (!record.is_object()) throw ParseError(where() + "expected a JSON object");
    if (record.contains("num_classes") && !record.contains("path")) {
      if (declared || !manifest.entries.empty()) {
        throw ParseError(where() + "num_classes header must be the first record");
      }
      const auto& n = record["num_classes"];
      if (!n.is_number_integer() || n.get<long long>() < 1) {
        throw ParseError(where() + "num_classes must be a positive integer");
      }
      declared = n.get<std::size_t>();
      continue;
    }
    if (!record.contains("path") || !record["path"].is_string()) {
      throw ParseError(where() + "missing string field \"path\"");
    }
    if (!record.contains("label") || !record["label"].is_number_integer()) {
      throw ParseError(where() + "missing integer field \"label\"");
    }
    const long long label = record["label"].get<long long>();
    if (label < 0) throw ParseError(where() + "label must be non-negative");
    if (declared && static_cast<std::size_t>(label) >= *declared) {
      throw ParseError(where() + "label " + std::to_string(label) + " is not below num_classes " +
                       std::to_string(*declared));
    }
    fs::path path = record["path"].get<std::string>();
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    manifest.entries.push_back({path.lexically_normal().string(), static_cast<std::size_t>(label)});
  }
  if (manifest.entries.empty()) throw ParseError("manifest has no entries");
  if (declared) {
    manifest.num_classes = *declared;
  } else {
    std::size_t max_label = 0;
    for (const auto& e : manifest.entries) max_label = std::max(max_label, e.class_index);
    manifest.num_classes = max_label + 1;
  }
  return manifest;
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  return parse_manifest(in, fs::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Codecs

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

inline Image decode_png(const std::vector<unsigned char>& bytes, const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DecodeError("cannot decode PNG '" + path + "': " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw DecodeError("cannot decode PNG '" + path + "': " + message);
  }
  std::vector<float> data(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) data[i] = pixels[i] / 255.0f;
  return Image(static_cast<int>(image.height), static_cast<int>(image.width), channels, std::move(data));
}

/// Binary PGM (P5) / PPM (P6), maxval up to 65535.
inline Image decode_pnm(const std::vector<unsigned char>& bytes, const std::string& path) {
  auto fail = [&](const std::string& why) -> DecodeError {
    return DecodeError("cannot decode PNM '" + path + "': " + why);
  };
  std::size_t pos = 2;
  auto next_token = [&]() -> long long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long long value = 0;
    std::size_t digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > (1LL << 31)) throw fail("header value too large");
      ++pos;
      ++digits;
    }
    if (digits == 0) throw fail("malformed header");
    return value;
  };
  const int channels = bytes[1] == '6' ? 3 : 1;
  const long long width = next_token();
  const long long height = next_token();
  const long long maxval = next_token();
  if (width < 1 || height < 1) throw fail("dimensions must be positive");
  if (maxval < 1 || maxval > 65535) throw fail("maxval must lie in [1, 65535]");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("malformed header");
  ++pos;
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * channels;
  if (bytes.size() - pos < count * sample_bytes) throw fail("truncated pixel data");
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned value = bytes[pos + i * sample_bytes];
    if (sample_bytes == 2) value = (value << 8) | bytes[pos + i * 2 + 1];
    data[i] = std::min(1.0f, static_cast<float>(value) / static_cast<float>(maxval));
  }
  return Image(static_cast<int>(height), static_cast<int>(width), channels, std::move(data));
}

inline std::uint8_t quantize(float v) {
  const double scaled = std::nearbyint(std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(scaled);
}

}  // namespace detail

/// Decode by content: PNG signature, or P5/P6 magic. Values scale to [0,1].
inline Image decode_image(const std::string& path) {
  const auto bytes = detail::read_file(path);
  static constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
    return detail::decode_png(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return detail::decode_pnm(bytes, path);
  }
  throw DecodeError("unsupported image format: '" + path + "'");
}

/// 8-bit PNG bytes; values are clamped and rounded half-to-even.
inline std::vector<unsigned char> encode_png(const Image& image) {
  detail::require(!image.empty(), "encode_png: empty image");
  std::vector<png_byte> pixels(image.data().size());
  std::transform(image.data().begin(), image.data().end(), pixels.begin(), detail::quantize);
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw InvariantError(std::string("PNG encoding failed: ") + png.message);
  }
  std::vector<unsigned char> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw InvariantError(std::string("PNG encoding failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

inline void write_file(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

inline void write_png(const fs::path& path, const Image& image) { write_file(path, encode_png(image)); }

/// Grayscale rendering of a mask (0 = black = partner region).
inline Image mask_to_image(const MixMask& mask) {
  std::vector<float> data(mask.data().size());
  std::transform(mask.data().begin(), mask.data().end(), data.begin(),
                 [](double v) { return static_cast<float>(v); });
  return Image(mask.height(), mask.width(), 1, std::move(data));
}

// ---------------------------------------------------------------------------
// Sidecar log

/// One mixlog.jsonl line: the sample's plan plus the knobs needed to rebuild
/// the image (merge mode, generator parameters) and the audited outputs.
struct SidecarRecord {
  std::string output_path;  // relative to the log's directory
  std::array<std::string, 2> source_paths;
  MixPlan plan;
  MergeMode merge_mode = MergeMode::Product;
  GeneratorParams generators;
  double lambda_merged = 0.0;
  SoftLabel merged_label;
};

namespace detail {

inline nlohmann::json view_to_json(const ViewOps& ops) {
  return {{"flip", ops.flip},
          {"padding", ops.padding},
          {"offset_row", ops.offset_row},
          {"offset_col", ops.offset_col}};
}

inline ViewOps view_from_json(const nlohmann::json& j) {
  ViewOps ops;
  ops.flip = j.at("flip").get<bool>();
  ops.padding = j.at("padding").get<int>();
  ops.offset_row = j.at("offset_row").get<int>();
  ops.offset_col = j.at("offset_col").get<int>();
  return ops;
}

}  // namespace detail

inline nlohmann::json to_json(const SidecarRecord& r) {
  nlohmann::json methods = nlohmann::json::array();
  for (GeneratorKind kind : r.plan.methods) methods.push_back(std::string(to_string(kind)));
  nlohmann::json aug = nlohmann::json::array();
  for (const auto& d : r.plan.mask_aug_draws) {
    aug.push_back({{"geometric", d.geometric},
                   {"theta", d.theta},
                   {"shear_x", d.shear_x},
                   {"shear_y", d.shear_y},
                   {"smooth_window", d.smooth_window}});
  }
  std::vector<double> label(r.merged_label.probs().begin(), r.merged_label.probs().end());
  nlohmann::json j;
  j["output_path"] = r.output_path;
  j["source_paths"] = {r.source_paths[0], r.source_paths[1]};
  j["index_first"] = r.plan.index_first;
  j["index_partner"] = r.plan.index_partner;
  j["is_self_mix"] = r.plan.is_self_mix;
  j["k"] = r.plan.k;
  j["methods"] = methods;
  j["sampled_lambdas"] = r.plan.lambdas;
  j["residual"] = r.plan.residual;
  j["mask_aug"] = aug;
  j["merge"] = std::string(to_string(r.merge_mode));
  j["generators"] = {{"fmix_decay", r.generators.fmix_decay},
                     {"grid_min", r.generators.grid_min},
                     {"grid_max", r.generators.grid_max}};
  j["views"] = {{"first", detail::view_to_json(r.plan.first_view)},
                {"partner", detail::view_to_json(r.plan.partner_view)}};
  j["lambda_merged"] = r.lambda_merged;
  j["merged_label"] = label;
  j["seed"] = r.plan.seed;
  j["stream_id"] = r.plan.stream_id;
  j["partner_stream_id"] = r.plan.partner_stream_id;
  return j;
}

inline SidecarRecord sidecar_from_json(const nlohmann::json& j) {
  SidecarRecord r;
  try {
    r.output_path = j.at("output_path").get<std::string>();
    const auto& sources = j.at("source_paths");
    if (!sources.is_array() || sources.size() != 2) throw ParseError("source_paths must hold two paths");
    r.source_paths = {sources[0].get<std::string>(), sources[1].get<std::string>()};
    r.plan.index_first = j.at("index_first").get<std::size_t>();
    r.plan.index_partner = j.at("index_partner").get<std::size_t>();
    r.plan.is_self_mix = j.at("is_self_mix").get<bool>();
    r.plan.k = j.at("k").get<int>();
    for (const auto& m : j.at("methods")) r.plan.methods.push_back(parse_generator_kind(m.get<std::string>()));
    r.plan.lambdas = j.at("sampled_lambdas").get<std::vector<double>>();
    r.plan.residual = j.at("residual").get<double>();
    for (const auto& a : j.at("mask_aug")) {
      MaskAugDecision d;
      d.geometric = a.at("geometric").get<bool>();
      d.theta = a.at("theta").get<double>();
      d.shear_x = a.at("shear_x").get<double>();
      d.shear_y = a.at("shear_y").get<double>();
      d.smooth_window = a.at("smooth_window").get<int>();
      r.plan.mask_aug_draws.push_back(d);
    }
    r.merge_mode = parse_merge_mode(j.at("merge").get<std::string>());
    const auto& g = j.at("generators");
    r.generators.fmix_decay = g.at("fmix_decay").get<double>();
    r.generators.grid_min = g.at("grid_min").get<int>();
    r.generators.grid_max = g.at("grid_max").get<int>();
    r.plan.first_view = detail::view_from_json(j.at("views").at("first"));
    r.plan.partner_view = detail::view_from_json(j.at("views").at("partner"));
    r.lambda_merged = j.at("lambda_merged").get<double>();
    r.merged_label = SoftLabel(j.at("merged_label").get<std::vector<double>>());
    r.plan.seed = j.at("seed").get<std::uint64_t>();
    r.plan.stream_id = j.at("stream_id").get<std::uint64_t>();
    r.plan.partner_stream_id = j.at("partner_stream_id").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sidecar record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("sidecar record: ") + e.what());
  }
  return r;
}

inline std::vector<SidecarRecord> load_mixlog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open mix log '" + path + "'");
  std::vector<SidecarRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(sidecar_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("mix log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("mix log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

inline std::string output_name(std::uint64_t index) {
  std::ostringstream name;
  name << "mix_" << std::setw(6) << std::setfill('0') << index << ".png";
  return name.str();
}

/// Write each sample as out_dir/mix_<stream_id>.png and append one record per
/// sample to `log`. `sources[i]` is the path of batch image i.
inline std::vector<SidecarRecord> encode_outputs(std::span<const MixedSample> samples,
                                                 std::span<const std::string> sources,
                                                 const fs::path& out_dir, const MiamixConfig& cfg,
                                                 std::ostream& log) {
  std::vector<SidecarRecord> records;
  records.reserve(samples.size());
  for (const MixedSample& s : samples) {
    detail::require(s.plan.index_first < sources.size() && s.plan.index_partner < sources.size(),
                    "encode_outputs: plan refers to a source outside the batch");
    SidecarRecord r;
    r.output_path = output_name(s.plan.stream_id);
    r.source_paths = {sources[s.plan.index_first], sources[s.plan.index_partner]};
    r.plan = s.plan;
    r.merge_mode = cfg.merge_mode;
    r.generators = cfg.generators;
    r.lambda_merged = s.lambda_merged;
    r.merged_label = s.label;
    write_png(out_dir / r.output_path, s.image);
    log << to_json(r).dump() << '\n';
    if (!log) throw IoError("cannot append to mix log in '" + out_dir.string() + "'");
    records.push_back(std::move(r));
  }
  return records;
}

/// Convenience: write samples plus a fresh out_dir/mixlog.jsonl.
inline std::vector<SidecarRecord> encode_outputs(std::span<const MixedSample> samples,
                                                 std::span<const std::string> sources,
                                                 const fs::path& out_dir, const MiamixConfig& cfg) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  std::ofstream log(out_dir / "mixlog.jsonl", std::ios::binary | std::ios::trunc);
  if (!log) throw IoError("cannot write '" + (out_dir / "mixlog.jsonl").string() + "'");
  return encode_outputs(samples, sources, out_dir, cfg, log);
}

struct ReplayResult {
  Image image;
  MixMask mask;
  double lambda_merged = 0.0;
};

/// Rebuild a mixed image from its record: decode both sources, re-apply the
/// recorded view transforms, regenerate the masks from (seed, stream_id),
/// re-apply the recorded mask augmentations, merge and blend.
inline ReplayResult replay_record(const SidecarRecord& record) {
  const Image first = decode_image(record.source_paths[0]);
  const Image partner = decode_image(record.source_paths[1]);
  const Image first_view = apply_view_ops(first, record.plan.first_view);
  const Image partner_view = apply_view_ops(partner, record.plan.partner_view);
  ReplayResult out;
  out.mask = plan_mask(record.plan, first_view.dims(), record.generators, record.merge_mode);
  out.lambda_merged = merged_lambda(out.mask);
  out.image = apply_mask(out.mask, first_view, partner_view);
  return out;
}

}  // namespace miamix
