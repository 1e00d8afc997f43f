#pragma once

// Implementations behind the miamix command-line tool. Each command takes
// a plain options struct and reports through return values and streams so
// it can be driven from tests as well as from main().

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <iomanip>
#include <optional>
#include <sstream>
#include <ostream>
#include <string>
#include <vector>

#include "miamix/config_io.hpp"
#include "miamix/core.hpp"
#include "miamix/dataset_io.hpp"
#include "miamix/errors.hpp"
#include "miamix/pipeline.hpp"

namespace miamix {

// ---------------------------------------------------------------------------
// Synthetic inputs (preview, bench, stats without a dataset)

/// Deterministic test card for class `label`: a two-colour oriented stripe
/// pattern with a disc, colours and geometry drawn from (seed, index).
inline Image synthetic_image(Dims dims, int channels, std::size_t label, std::uint64_t seed,
                             std::uint64_t index) {
  RngStream rng(seed, index, Purpose::Synthetic);
  std::array<float, 3> a{}, b{};
  for (int c = 0; c < 3; ++c) {
    const double hue_bias = ((label * 7 + static_cast<std::size_t>(c) * 3) % 10) / 10.0;
    a[c] = static_cast<float>(0.5 * hue_bias + 0.5 * rng.uniform());
    b[c] = static_cast<float>(1.0 - a[c]);
  }
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double period = 4.0 + rng.uniform() * dims.width / 2.0;
  const double disc_r = rng.uniform(0.15, 0.35) * std::min(dims.height, dims.width);
  const double disc_y = rng.uniform() * dims.height;
  const double disc_x = rng.uniform() * dims.width;
  Image image(dims.height, dims.width, channels);
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      const double t = std::cos(angle) * c + std::sin(angle) * r;
      const bool stripe = std::fmod(std::abs(t), period) < period / 2.0;
      const bool disc = std::hypot(r - disc_y, c - disc_x) < disc_r;
      const auto& colour = (stripe != disc) ? a : b;
      for (int ch = 0; ch < channels; ++ch) {
        image.at(r, c, ch) = channels == 1 ? (colour[0] + colour[1] + colour[2]) / 3.0f : colour[ch];
      }
    }
  }
  return image;
}

/// Write `count` synthetic PNGs (img_%06d.png, labels cycling over
/// num_classes) and a manifest.jsonl with relative paths into `dir`.
/// Returns the manifest path.
inline std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir,
                                                     std::size_t count, Dims dims, int channels,
                                                     std::size_t num_classes, std::uint64_t seed) {
  detail::require<ConfigError>(count >= 1 && num_classes >= 1, "synthetic dataset needs images and classes");
  detail::require<ConfigError>(channels == 1 || channels == 3, "synthetic images have 1 or 3 channels");
  std::filesystem::create_directories(dir);
  const auto manifest_path = dir / "manifest.jsonl";
  std::ofstream manifest(manifest_path, std::ios::binary | std::ios::trunc);
  if (!manifest) throw IoError("cannot write '" + manifest_path.string() + "'");
  manifest << nlohmann::json{{"num_classes", num_classes}}.dump() << '\n';
  for (std::size_t i = 0; i < count; ++i) {
    std::ostringstream name;
    name << "img_" << std::setw(6) << std::setfill('0') << i << ".png";
    const std::size_t label = i % num_classes;
    write_png(dir / name.str(), synthetic_image(dims, channels, label, seed, i));
    manifest << nlohmann::json{{"path", name.str()}, {"label", label}}.dump() << '\n';
  }
  if (!manifest) throw IoError("cannot write '" + manifest_path.string() + "'");
  return manifest_path;
}

// ---------------------------------------------------------------------------
// mix

struct MixOptions {
  MiamixConfig cfg;
  std::string manifest;
  std::filesystem::path out_dir;
  std::size_t batch_size = 128;
  unsigned workers = 1;
};

struct MixSummary {
  std::size_t count = 0;
  std::size_t self_mix_count = 0;
  double mean_lambda_merged = 0.0;
  std::array<std::size_t, kNumGeneratorKinds> method_histogram{};
};

inline void print_summary(std::ostream& out, const MixSummary& s) {
  out << "samples: " << s.count << '\n'
      << "self-mixed: " << s.self_mix_count << '\n'
      << "mean lambda_merged: " << std::setprecision(6) << s.mean_lambda_merged << '\n'
      << "method histogram:";
  for (GeneratorKind kind : kAllGeneratorKinds) {
    out << ' ' << to_string(kind) << '=' << s.method_histogram[kind_index(kind)];
  }
  out << '\n';
}

/// Mix every manifest entry (in manifest order, batch by batch) and write
/// PNGs plus mixlog.jsonl into out_dir. Stream ids are global sample indices.
inline MixSummary run_mix(const MixOptions& options) {
  validate(options.cfg);
  detail::require<ConfigError>(options.batch_size >= 1, "batch size must be at least 1");
  const Manifest manifest = load_manifest(options.manifest);
  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec) throw IoError("cannot create '" + options.out_dir.string() + "': " + ec.message());
  const auto log_path = options.out_dir / "mixlog.jsonl";
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  if (!log) throw IoError("cannot write '" + log_path.string() + "'");

  MixSummary summary;
  double lambda_sum = 0.0;
  std::optional<std::pair<Dims, int>> shape;
  const std::size_t total = manifest.entries.size();
  for (std::size_t start = 0, batch = 0; start < total; start += options.batch_size, ++batch) {
    const std::size_t n = std::min(options.batch_size, total - start);
    std::vector<Image> images(n);
    std::vector<SoftLabel> labels(n);
    std::vector<std::string> sources(n);
    parallel_for(n, options.workers, [&](std::size_t i) {
      const ManifestEntry& entry = manifest.entries[start + i];
      images[i] = decode_image(entry.path);
      labels[i] = make_one_hot(entry.class_index, manifest.num_classes);
      sources[i] = entry.path;
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (!shape) shape.emplace(images[i].dims(), images[i].channels());
      if (images[i].dims() != shape->first || images[i].channels() != shape->second) {
        throw ArgumentError("image '" + sources[i] + "' is " + to_string(images[i].dims()) + "x" +
                            std::to_string(images[i].channels()) + ", expected " +
                            to_string(shape->first) + "x" + std::to_string(shape->second));
      }
    }
    BatchOptions batch_options;
    batch_options.batch_index = batch;
    batch_options.stream_offset = start;
    batch_options.workers = options.workers;
    const auto samples = mix_batch(images, labels, options.cfg, batch_options);
    encode_outputs(samples, sources, options.out_dir, options.cfg, log);
    for (const MixedSample& s : samples) {
      if (s.lambda_merged < 0.0 || s.lambda_merged > 1.0) {
        throw InvariantError("lambda_merged outside [0,1]");
      }
      ++summary.count;
      summary.self_mix_count += s.plan.is_self_mix ? 1 : 0;
      lambda_sum += s.lambda_merged;
      for (GeneratorKind kind : s.plan.methods) ++summary.method_histogram[kind_index(kind)];
    }
  }
  log.flush();
  if (!log) throw IoError("cannot write '" + log_path.string() + "'");
  summary.mean_lambda_merged = summary.count ? lambda_sum / static_cast<double>(summary.count) : 0.0;
  return summary;
}

// ---------------------------------------------------------------------------
// replay

struct ReplaySummary {
  std::size_t count = 0;
  std::size_t mismatched = 0;
  std::vector<std::string> mismatched_outputs;
};

/// Rebuild every record of a mix log and compare the PNG bytes with the
/// file on disk. When `out_dir` is set the rebuilt PNGs are written there.
inline ReplaySummary run_replay(const std::filesystem::path& log_path,
                                const std::optional<std::filesystem::path>& out_dir = {}) {
  const auto records = load_mixlog(log_path.string());
  const auto base = log_path.parent_path();
  if (out_dir) std::filesystem::create_directories(*out_dir);
  ReplaySummary summary;
  for (const SidecarRecord& record : records) {
    const ReplayResult result = replay_record(record);
    const auto bytes = encode_png(result.image);
    if (out_dir) write_file(*out_dir / record.output_path, bytes);
    ++summary.count;
    std::vector<unsigned char> original;
    try {
      original = detail::read_file((base / record.output_path).string());
    } catch (const IoError&) {
    }
    if (original != bytes || result.lambda_merged != record.lambda_merged) {
      ++summary.mismatched;
      summary.mismatched_outputs.push_back(record.output_path);
    }
  }
  return summary;
}

// ---------------------------------------------------------------------------
// preview

struct PreviewOptions {
  MiamixConfig cfg;
  int rows = 2;
  int cols = 5;
  Dims dims{64, 64};
  std::optional<std::string> manifest;
  std::optional<double> forced_lambda;  // forces k = 1 with this ratio
  std::filesystem::path out_path = "preview.png";
};

struct PreviewResult {
  Image sheet;
  std::vector<MixedSample> samples;
};

/// Contact sheet: even rows hold mixed samples, the row below each holds
/// the merged masks in grayscale. Cells are separated by 2 white pixels.
inline PreviewResult render_preview(const PreviewOptions& options) {
  validate(options.cfg);
  detail::require<ConfigError>(options.rows >= 2 && options.rows % 2 == 0 && options.cols >= 1,
                               "preview grid needs an even number of rows and at least one column");
  if (options.forced_lambda) {
    detail::require<ConfigError>(*options.forced_lambda >= 0.0 && *options.forced_lambda <= 1.0,
                                 "forced lambda must lie in [0,1]");
  }
  const auto pairs_count = static_cast<std::size_t>(options.rows / 2 * options.cols);
  std::vector<Image> images;
  std::vector<SoftLabel> labels;
  if (options.manifest) {
    const Manifest manifest = load_manifest(*options.manifest);
    for (std::size_t i = 0; i < pairs_count; ++i) {
      const auto& entry = manifest.entries[i % manifest.entries.size()];
      images.push_back(decode_image(entry.path));
      labels.push_back(make_one_hot(entry.class_index, manifest.num_classes));
      if (images.back().dims() != images.front().dims() ||
          images.back().channels() != images.front().channels()) {
        throw ArgumentError("preview images must share dimensions");
      }
    }
  } else {
    constexpr std::size_t kClasses = 10;
    for (std::size_t i = 0; i < pairs_count; ++i) {
      images.push_back(synthetic_image(options.dims, 3, i % kClasses, options.cfg.seed, i));
      labels.push_back(make_one_hot(i % kClasses, kClasses));
    }
  }
  const MiamixConfig& cfg = options.cfg;
  RngStream pairing_rng(cfg.seed, 0, Purpose::Pairing);
  const auto pairs = pair_samples(images.size(), cfg.p_self, pairing_rng, cfg.pairing);
  PreviewResult result;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::size_t j = pairs[i].partner;
    const RngStream sample(cfg.seed, i);
    const RngStream partner(cfg.seed, j);
    RngStream first_rng = sample.substream(Purpose::FirstView);
    RngStream partner_rng = partner.substream(Purpose::PartnerView);
    const ViewOps first_ops = draw_view_ops(cfg.view_aug, first_rng);
    const ViewOps partner_ops = draw_view_ops(cfg.view_aug, partner_rng);
    MixPlan plan = draw_plan(cfg, images[i].dims(), sample);
    plan.index_first = i;
    plan.index_partner = j;
    plan.is_self_mix = pairs[i].is_self_mix;
    plan.partner_stream_id = j;
    plan.first_view = first_ops;
    plan.partner_view = partner_ops;
    if (options.forced_lambda) {
      plan.k = 1;
      plan.methods.resize(1);
      plan.mask_aug_draws.resize(1);
      plan.lambdas = {*options.forced_lambda};
      plan.residual = 1.0 - *options.forced_lambda;
    }
    result.samples.push_back(execute_plan(std::move(plan), apply_view_ops(images[i], first_ops),
                                          labels[i], apply_view_ops(images[j], partner_ops),
                                          labels[j], cfg.generators, cfg.merge_mode));
  }

  constexpr int kGap = 2;
  const Dims cell = images.front().dims();
  const int sheet_h = options.rows * cell.height + (options.rows + 1) * kGap;
  const int sheet_w = options.cols * cell.width + (options.cols + 1) * kGap;
  result.sheet = Image(sheet_h, sheet_w, 3, 1.0f);
  for (std::size_t s = 0; s < result.samples.size(); ++s) {
    const int pair_row = static_cast<int>(s) / options.cols;
    const int col = static_cast<int>(s) % options.cols;
    const int x0 = kGap + col * (cell.width + kGap);
    const int y_sample = kGap + (2 * pair_row) * (cell.height + kGap);
    const int y_mask = y_sample + cell.height + kGap;
    const Image& mixed = result.samples[s].image;
    const MixMask& mask = result.samples[s].mask;
    for (int r = 0; r < cell.height; ++r) {
      for (int c = 0; c < cell.width; ++c) {
        for (int ch = 0; ch < 3; ++ch) {
          result.sheet.at(y_sample + r, x0 + c, ch) =
              mixed.at(r, c, mixed.channels() == 3 ? ch : 0);
          result.sheet.at(y_mask + r, x0 + c, ch) = static_cast<float>(mask.at(r, c));
        }
      }
    }
  }
  return result;
}

inline PreviewResult run_preview(const PreviewOptions& options) {
  PreviewResult result = render_preview(options);
  if (const auto parent = options.out_path.parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  write_png(options.out_path, result.sheet);
  return result;
}

// ---------------------------------------------------------------------------
// stats

struct StatsOptions {
  MiamixConfig cfg;
  std::size_t num_draws = 10000;
  Dims dims{32, 32};
  unsigned workers = 1;
};

namespace detail {

/// Nearest-rank quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

struct StatsDraw {
  std::vector<double> lambdas;
  double residual = 0.0;
  double lambda_merged = 0.0;
  std::vector<std::pair<GeneratorKind, double>> realized_errors;
  std::vector<std::pair<GeneratorKind, double>> aug_errors;
  std::vector<bool> aug_geometric;
};

}  // namespace detail

struct StatsReport {
  std::vector<std::array<std::string, 4>> rows;  // section, name, statistic, value

  void add(std::string section, std::string name, std::string statistic, double value) {
    rows.push_back({std::move(section), std::move(name), std::move(statistic),
                    detail::format_double(value)});
  }
  /// First value for (section, name, statistic), if present.
  std::optional<double> find(std::string_view section, std::string_view name,
                             std::string_view statistic) const {
    for (const auto& r : rows) {
      if (r[0] == section && r[1] == name && r[2] == statistic) return std::stod(r[3]);
    }
    return std::nullopt;
  }
  void write_csv(std::ostream& out) const {
    out << "section,name,statistic,value\n";
    for (const auto& r : rows) out << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << '\n';
  }
};

/// Draw `num_draws` plans exactly as the pipeline would (stream d for draw d)
/// and summarize the realized-ratio error of each generator, the
/// lambda_merged histogram, Dirichlet marginal moments and the mean shift
/// caused by mask augmentation.
inline StatsReport run_stats(const StatsOptions& options) {
  validate(options.cfg);
  detail::require<ConfigError>(options.num_draws >= 1, "stats needs at least one draw");
  detail::require<ConfigError>(options.dims.height > 0 && options.dims.width > 0,
                               "stats dimensions must be positive");
  const MiamixConfig& cfg = options.cfg;
  std::vector<detail::StatsDraw> draws(options.num_draws);
  parallel_for(options.num_draws, options.workers, [&](std::size_t d) {
    const RngStream sample(cfg.seed, d);
    const MixPlan plan = draw_plan(cfg, options.dims, sample);
    detail::StatsDraw& out = draws[d];
    out.lambdas = plan.lambdas;
    out.residual = plan.residual;
    std::vector<MixMask> masks;
    for (int j = 0; j < plan.k; ++j) {
      const auto layer = static_cast<std::size_t>(j);
      RngStream shape_rng = sample.substream(Purpose::MaskShape, static_cast<std::uint16_t>(j));
      const MixMask raw = generate(plan.methods[layer], plan.lambdas[layer], options.dims,
                                   shape_rng, cfg.generators);
      const double raw_mean = mask_mean(raw);
      out.realized_errors.emplace_back(plan.methods[layer],
                                       std::abs(raw_mean - (1.0 - plan.lambdas[layer])));
      const MaskAugDecision& decision = plan.mask_aug_draws[layer];
      MixMask augmented = apply_mask_augmentation(raw, decision);
      if (!decision.is_identity()) {
        out.aug_errors.emplace_back(plan.methods[layer], std::abs(mask_mean(augmented) - raw_mean));
        out.aug_geometric.push_back(decision.geometric);
      }
      masks.push_back(std::move(augmented));
    }
    out.lambda_merged = merged_lambda(merge_masks(masks, cfg.merge_mode));
  });

  StatsReport report;
  auto summarize = [&](const std::string& section, const std::string& name,
                       std::vector<double> values) {
    std::sort(values.begin(), values.end());
    report.add(section, name, "count", static_cast<double>(values.size()));
    if (values.empty()) return;
    double sum = 0.0;
    for (double v : values) sum += v;
    report.add(section, name, "mean", sum / static_cast<double>(values.size()));
    report.add(section, name, "p50", detail::quantile_sorted(values, 0.50));
    report.add(section, name, "p90", detail::quantile_sorted(values, 0.90));
    report.add(section, name, "p99", detail::quantile_sorted(values, 0.99));
    report.add(section, name, "max", values.back());
  };

  for (GeneratorKind kind : kAllGeneratorKinds) {
    std::vector<double> errors;
    for (const auto& d : draws) {
      for (const auto& [k, e] : d.realized_errors) {
        if (k == kind) errors.push_back(e);
      }
    }
    if (!errors.empty()) summarize("realized_error", std::string(to_string(kind)), errors);
  }

  constexpr int kBins = 10;
  std::array<std::size_t, kBins> histogram{};
  std::vector<double> merged;
  for (const auto& d : draws) {
    merged.push_back(d.lambda_merged);
    histogram[static_cast<std::size_t>(std::min(kBins - 1, static_cast<int>(d.lambda_merged * kBins)))]++;
  }
  for (int b = 0; b < kBins; ++b) {
    std::ostringstream bin;
    bin << '[' << std::fixed << std::setprecision(1) << b / 10.0 << ';' << (b + 1) / 10.0
        << (b + 1 == kBins ? ']' : ')');
    report.add("lambda_merged_hist", bin.str(), "count", static_cast<double>(histogram[b]));
  }
  summarize("lambda_merged", "all", merged);

  auto moments = [&](const std::string& name, const std::vector<double>& values) {
    if (values.empty()) return;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    report.add("dirichlet", name, "count", static_cast<double>(values.size()));
    report.add("dirichlet", name, "mean", mean);
    report.add("dirichlet", name, "variance", var);
  };
  std::vector<double> first, sum, residual;
  for (const auto& d : draws) {
    first.push_back(d.lambdas.front());
    double s = 0.0;
    for (double l : d.lambdas) s += l;
    sum.push_back(s);
    residual.push_back(d.residual);
  }
  moments("lambda_1", first);
  moments("lambda_sum", sum);
  moments("residual", residual);

  std::vector<double> geometric, smooth_only;
  for (GeneratorKind kind : kAllGeneratorKinds) {
    std::vector<double> errors;
    for (const auto& d : draws) {
      for (std::size_t i = 0; i < d.aug_errors.size(); ++i) {
        if (d.aug_errors[i].first != kind) continue;
        errors.push_back(d.aug_errors[i].second);
        (d.aug_geometric[i] ? geometric : smooth_only).push_back(d.aug_errors[i].second);
      }
    }
    if (!errors.empty()) summarize("aug_error", std::string(to_string(kind)), errors);
  }
  summarize("aug_error", "geometric", geometric);
  summarize("aug_error", "smooth_only", smooth_only);
  return report;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  MiamixConfig cfg;
  std::size_t num_samples = 10000;
  Dims dims{64, 64};
  int channels = 3;
  std::size_t batch_size = 128;
  unsigned workers = 1;
};

struct BenchRow {
  std::string name;
  double seconds = 0.0;
  double samples_per_second = 0.0;
};

struct BenchReport {
  std::array<BenchRow, 3> rows;  // identity, mixup, miamix
  double ratio_vs_identity = 0.0;  // time(miamix) / time(identity)
  double ratio_vs_mixup = 0.0;     // time(miamix) / time(mixup)
  double total_seconds = 0.0;

  void write(std::ostream& out) const {
    out << "pipeline,seconds,samples_per_second\n";
    for (const auto& r : rows) {
      out << r.name << ',' << detail::format_double(r.seconds) << ','
          << detail::format_double(r.samples_per_second) << '\n';
    }
    out << "ratio miamix/identity," << detail::format_double(ratio_vs_identity) << '\n'
        << "ratio miamix/mixup," << detail::format_double(ratio_vs_mixup) << '\n';
  }
};

/// Mixup-only configuration: one layer, constant masks, same views and
/// pairing as `cfg`.
inline MiamixConfig plain_mixup_config(MiamixConfig cfg) {
  cfg.k_choices = {1};
  cfg.method_weights = {1.0, 0.0, 0.0, 0.0, 0.0};
  return cfg;
}

/// Time three pipelines over the same synthetic batches: pass-through
/// (copy images and labels), plain mixup, and the configured mix.
inline BenchReport run_bench(const BenchOptions& options) {
  validate(options.cfg);
  detail::require<ConfigError>(options.num_samples >= 1, "bench needs at least one sample");
  detail::require<ConfigError>(options.batch_size >= 1, "batch size must be at least 1");
  const std::size_t pool_size = std::min(options.batch_size, options.num_samples);
  constexpr std::size_t kClasses = 10;
  std::vector<Image> pool;
  std::vector<SoftLabel> pool_labels;
  for (std::size_t i = 0; i < pool_size; ++i) {
    pool.push_back(synthetic_image(options.dims, options.channels, i % kClasses, options.cfg.seed, i));
    pool_labels.push_back(make_one_hot(i % kClasses, kClasses));
  }

  using Clock = std::chrono::steady_clock;
  using Batch = std::span<const Image>;
  using Labels = std::span<const SoftLabel>;
  std::size_t sink = 0;
  auto identity = [&](Batch images, Labels labels, std::size_t, std::size_t) {
    std::vector<Image> out_images(images.size());
    std::vector<SoftLabel> out_labels(labels.size());
    parallel_for(images.size(), options.workers, [&](std::size_t i) {
      out_images[i] = images[i];
      out_labels[i] = labels[i];
    });
    sink += out_images.size();
  };
  auto mixer = [&](MiamixConfig cfg) {
    return [&, cfg = std::move(cfg)](Batch images, Labels labels, std::size_t batch,
                                     std::size_t offset) {
      BatchOptions batch_options;
      batch_options.batch_index = batch;
      batch_options.stream_offset = offset;
      batch_options.workers = options.workers;
      sink += mix_batch(images, labels, cfg, batch_options).size();
    };
  };
  auto mixup = mixer(plain_mixup_config(options.cfg));
  auto full = mixer(options.cfg);

  // The three pipelines take turns on every batch so that drift in machine
  // load hits all of them alike.
  std::array<double, 3> seconds{};
  for (std::size_t done = 0, batch = 0; done < options.num_samples; ++batch) {
    const std::size_t n = std::min(pool_size, options.num_samples - done);
    const Batch images(pool.data(), n);
    const Labels labels(pool_labels.data(), n);
    auto timed = [&](auto& pipeline, double& total) {
      const auto start = Clock::now();
      pipeline(images, labels, batch, done);
      total += std::chrono::duration<double>(Clock::now() - start).count();
    };
    timed(identity, seconds[0]);
    timed(mixup, seconds[1]);
    timed(full, seconds[2]);
    done += n;
  }
  const double t_identity = seconds[0];
  const double t_mixup = seconds[1];
  const double t_full = seconds[2];
  detail::require<InvariantError>(sink == 3 * options.num_samples, "bench lost samples");

  constexpr double kTiny = 1e-9;
  auto row = [&](std::string name, double seconds) {
    return BenchRow{std::move(name), seconds,
                    static_cast<double>(options.num_samples) / std::max(seconds, kTiny)};
  };
  BenchReport report;
  report.rows = {row("identity", t_identity), row("mixup", t_mixup), row("miamix", t_full)};
  report.ratio_vs_identity = std::max(t_full, kTiny) / std::max(t_identity, kTiny);
  report.ratio_vs_mixup = std::max(t_full, kTiny) / std::max(t_mixup, kTiny);
  report.total_seconds = t_identity + t_mixup + t_full;
  return report;
}

}  // namespace miamix
