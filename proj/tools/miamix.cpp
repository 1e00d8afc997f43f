// miamix: mix / preview / stats / bench / replay / synth over the header library.
//
// Config precedence: defaults < --config file < individual flags.
// Exit codes: 0 ok, 2 argument/config, 3 I/O or decode, 4 invariant.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "miamix/commands.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitArgument = 2;
constexpr int kExitIo = 3;
constexpr int kExitInvariant = 4;

// Engine flags shared by every subcommand. Values are kept as text and fed
// through the config-file parser so both paths validate identically.
struct EngineFlags {
  std::optional<std::string> config_path;
  std::map<std::string, std::string> values;
  bool print_config = false;
};

const char* const kEngineKeys[][2] = {
    {"alpha", "Dirichlet concentration"},
    {"k", "layer-count choices, comma list"},
    {"weights", "method weights over Mixup,CutMix,FMix,GridMix,AGMix"},
    {"p-self", "self-mixing probability"},
    {"p-aug", "rotate+shear probability per eligible mask"},
    {"p-smooth", "smoothing probability per eligible mask"},
    {"merge", "mask merge: product, sum, sum-literal"},
    {"seed", "master seed"},
    {"smooth-windows", "box filter sizes, comma list"},
    {"max-rotate", "max rotation in radians"},
    {"max-shear", "max shear factor"},
    {"eligible", "generators that receive mask augmentation"},
    {"view-aug", "flip/crop views on or off"},
    {"hflip-p", "horizontal flip probability"},
    {"crop-padding", "reflect padding for random crops"},
    {"fmix-decay", "FMix spectrum decay power"},
    {"grid-min", "smallest GridMix grid"},
    {"grid-max", "largest GridMix grid"},
    {"pairing", "partner sampling: permutation, replacement"},
};

void add_engine_flags(CLI::App& cmd, EngineFlags& flags) {
  cmd.add_option("--config", flags.config_path, "key = value config file");
  cmd.add_flag("--print-config", flags.print_config, "print the effective config and exit");
  for (const auto& [key, help] : kEngineKeys) {
    const std::string name = key;
    cmd.add_option_function<std::string>(
        "--" + name, [&flags, name](const std::string& v) { flags.values[name] = v; }, help);
  }
}

miamix::MiamixConfig resolve_config(const EngineFlags& flags) {
  miamix::MiamixConfig cfg;
  if (flags.config_path) cfg = miamix::load_config_file(*flags.config_path, cfg);
  for (const auto& [key, value] : flags.values) miamix::set_config_value(cfg, key, value);
  miamix::validate(cfg);
  return cfg;
}

miamix::Dims parse_size(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw miamix::ConfigError("size must look like HxW, got '" + text + "'");
  const int h = miamix::detail::parse_number<int>(std::string_view(text).substr(0, x), "size");
  const int w = miamix::detail::parse_number<int>(std::string_view(text).substr(x + 1), "size");
  if (h <= 0 || w <= 0) throw miamix::ConfigError("size must be positive, got '" + text + "'");
  return {h, w};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MiAMix mixed-sample augmentation"};
  app.require_subcommand(1);

  EngineFlags mix_flags, preview_flags, stats_flags, bench_flags;
  unsigned workers = 1;
  std::size_t batch_size = 128;
  std::string size_text = "64x64";

  auto* mix = app.add_subcommand("mix", "mix every manifest image and write PNGs + mixlog.jsonl");
  add_engine_flags(*mix, mix_flags);
  std::string manifest_path, out_dir;
  mix->add_option("--manifest", manifest_path, "manifest.jsonl");
  mix->add_option("--out", out_dir, "output directory");
  mix->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  mix->add_option("--batch-size", batch_size, "samples per batch")->check(CLI::PositiveNumber);

  auto* preview = app.add_subcommand("preview", "render a sample/mask contact sheet");
  add_engine_flags(*preview, preview_flags);
  miamix::PreviewOptions preview_options;
  std::string preview_out = "preview.png";
  std::optional<std::string> preview_manifest;
  std::optional<double> forced_lambda;
  preview->add_option("--out", preview_out, "output PNG");
  preview->add_option("--manifest", preview_manifest, "use manifest images instead of synthetic ones");
  preview->add_option("--rows", preview_options.rows, "grid rows (even: sample row, mask row)");
  preview->add_option("--cols", preview_options.cols, "grid columns");
  preview->add_option("--size", size_text, "synthetic image size HxW");
  preview->add_option("--lambda", forced_lambda, "force a single layer with this ratio");

  auto* stats = app.add_subcommand("stats", "CSV summary of ratio and mask statistics");
  add_engine_flags(*stats, stats_flags);
  miamix::StatsOptions stats_options;
  std::optional<std::string> stats_out;
  std::string stats_size = "32x32";
  stats->add_option("--draws", stats_options.num_draws, "number of plans to draw");
  stats->add_option("--size", stats_size, "mask size HxW");
  stats->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  stats->add_option("--out", stats_out, "write CSV here instead of stdout");

  auto* bench = app.add_subcommand("bench", "throughput: identity vs mixup vs full pipeline");
  add_engine_flags(*bench, bench_flags);
  miamix::BenchOptions bench_options;
  bench->add_option("--samples", bench_options.num_samples, "samples per pipeline");
  bench->add_option("--size", size_text, "image size HxW");
  bench->add_option("--channels", bench_options.channels, "1 or 3")->check(CLI::IsMember({1, 3}));
  bench->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--batch-size", batch_size, "samples per batch")->check(CLI::PositiveNumber);

  auto* replay = app.add_subcommand("replay", "rebuild outputs from mixlog.jsonl and compare bytes");
  std::string log_path;
  std::optional<std::string> replay_out;
  replay->add_option("--log", log_path, "mixlog.jsonl")->required();
  replay->add_option("--out", replay_out, "also write rebuilt PNGs here");

  auto* synth = app.add_subcommand("synth", "write a synthetic PNG dataset with manifest.jsonl");
  std::string synth_dir;
  std::size_t synth_count = 256, synth_classes = 10;
  int synth_channels = 3;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_dir, "output directory")->required();
  synth->add_option("--count", synth_count, "number of images");
  synth->add_option("--classes", synth_classes, "number of classes");
  synth->add_option("--size", size_text, "image size HxW");
  synth->add_option("--channels", synth_channels, "1 or 3")->check(CLI::IsMember({1, 3}));
  synth->add_option("--seed", synth_seed, "seed for image content");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitArgument;
  }

  try {
    if (mix->parsed()) {
      const auto cfg = resolve_config(mix_flags);
      if (mix_flags.print_config) {
        std::cout << miamix::format_config(cfg);
        return kExitOk;
      }
      if (manifest_path.empty() || out_dir.empty()) {
        throw miamix::ArgumentError("mix needs --manifest and --out");
      }
      std::cout << "# effective config\n" << miamix::format_config(cfg);
      miamix::MixOptions options{cfg, manifest_path, out_dir, batch_size, workers};
      miamix::print_summary(std::cout, miamix::run_mix(options));
    } else if (preview->parsed()) {
      const auto cfg = resolve_config(preview_flags);
      if (preview_flags.print_config) {
        std::cout << miamix::format_config(cfg);
        return kExitOk;
      }
      preview_options.cfg = cfg;
      preview_options.dims = parse_size(size_text);
      preview_options.manifest = preview_manifest;
      preview_options.forced_lambda = forced_lambda;
      preview_options.out_path = preview_out;
      const auto result = miamix::run_preview(preview_options);
      std::cout << "wrote " << preview_out << " (" << result.samples.size() << " sample/mask pairs)\n";
    } else if (stats->parsed()) {
      const auto cfg = resolve_config(stats_flags);
      if (stats_flags.print_config) {
        std::cout << miamix::format_config(cfg);
        return kExitOk;
      }
      stats_options.cfg = cfg;
      stats_options.dims = parse_size(stats_size);
      stats_options.workers = workers;
      const auto report = miamix::run_stats(stats_options);
      if (stats_out) {
        std::ofstream out(*stats_out);
        if (!out) throw miamix::IoError("cannot write '" + *stats_out + "'");
        report.write_csv(out);
      } else {
        report.write_csv(std::cout);
      }
    } else if (bench->parsed()) {
      const auto cfg = resolve_config(bench_flags);
      if (bench_flags.print_config) {
        std::cout << miamix::format_config(cfg);
        return kExitOk;
      }
      bench_options.cfg = cfg;
      bench_options.dims = parse_size(size_text);
      bench_options.workers = workers;
      bench_options.batch_size = batch_size;
      miamix::run_bench(bench_options).write(std::cout);
    } else if (synth->parsed()) {
      const auto path = miamix::write_synthetic_dataset(synth_dir, synth_count, parse_size(size_text),
                                                        synth_channels, synth_classes, synth_seed);
      std::cout << "wrote " << path.string() << '\n';
    } else if (replay->parsed()) {
      std::optional<std::filesystem::path> out;
      if (replay_out) out = *replay_out;
      const auto summary = miamix::run_replay(log_path, out);
      std::cout << "replayed " << summary.count << ", mismatched " << summary.mismatched << '\n';
      for (const auto& name : summary.mismatched_outputs) std::cerr << "mismatch: " << name << '\n';
      if (summary.mismatched) return kExitInvariant;
    }
  } catch (const miamix::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitArgument;
  } catch (const miamix::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitArgument;
  } catch (const miamix::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const miamix::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitIo;
  } catch (const miamix::DecodeError& e) {
    std::cerr << "decode error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
  return kExitOk;
}
