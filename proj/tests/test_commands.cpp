#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

namespace miamix {
namespace {

using testing::TempDir;

TEST(Synthetic, DeterministicAndLabelled) {
  const Image a = synthetic_image({16, 16}, 3, 2, 7, 0);
  EXPECT_EQ(a, synthetic_image({16, 16}, 3, 2, 7, 0));
  EXPECT_NE(a, synthetic_image({16, 16}, 3, 2, 7, 1));
  TempDir dir("synth");
  const auto manifest = write_synthetic_dataset(dir.path(), 12, {8, 8}, 3, 4, 1);
  const Manifest m = load_manifest(manifest.string());
  EXPECT_EQ(m.entries.size(), 12u);
  EXPECT_EQ(m.num_classes, 4u);
  for (const auto& e : m.entries) {
    EXPECT_LT(e.class_index, 4u);
    EXPECT_EQ(decode_image(e.path).dims(), (Dims{8, 8}));
  }
}

TEST(Stats, MixupOnlySingleLayerHasNoRealizedError) {
  StatsOptions opt;
  opt.cfg.k_choices = {1};
  opt.cfg.method_weights = {1, 0, 0, 0, 0};
  opt.num_draws = 2000;
  const StatsReport r = run_stats(opt);
  EXPECT_EQ(r.find("realized_error", "Mixup", "max").value(), 0.0);
  EXPECT_FALSE(r.find("realized_error", "CutMix", "count").has_value());
  EXPECT_EQ(r.find("lambda_merged", "all", "count").value(), 2000.0);
}

TEST(Stats, SingleLayerMarginalIsUniform) {
  StatsOptions opt;
  opt.cfg.k_choices = {1};
  opt.cfg.method_weights = {1, 0, 0, 0, 0};
  opt.num_draws = 100000;
  opt.dims = {4, 4};
  opt.workers = 4;
  const StatsReport r = run_stats(opt);
  EXPECT_NEAR(r.find("dirichlet", "lambda_1", "mean").value(), 0.5, 0.01);
  EXPECT_NEAR(r.find("dirichlet", "lambda_1", "variance").value(), 1.0 / 12.0, 0.003);
}

TEST(Stats, FMixErrorBelowOnePixel) {
  StatsOptions opt;
  opt.cfg.method_weights = {0, 0, 1, 0, 0};
  opt.num_draws = 1000;
  const StatsReport r = run_stats(opt);
  EXPECT_LE(r.find("realized_error", "FMix", "max").value(), 0.5 / (32 * 32) + 1e-12);
}

TEST(Stats, HistogramCoversAllDraws) {
  StatsOptions opt;
  opt.num_draws = 3000;
  const StatsReport r = run_stats(opt);
  double total = 0.0;
  for (const auto& row : r.rows) {
    if (row[0] == "lambda_merged_hist") total += std::stod(row[3]);
  }
  EXPECT_EQ(total, 3000.0);
  std::ostringstream csv;
  r.write_csv(csv);
  EXPECT_EQ(csv.str().rfind("section,name,statistic,value\n", 0), 0u);
  EXPECT_LE(r.find("aug_error", "smooth_only", "max").value_or(0.0), 0.02);
}

TEST(Stats, WorkersDoNotChangeResults) {
  StatsOptions opt;
  opt.num_draws = 500;
  opt.workers = 1;
  std::ostringstream a, b;
  run_stats(opt).write_csv(a);
  opt.workers = 6;
  run_stats(opt).write_csv(b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Preview, GridAndDeterminism) {
  TempDir dir("preview");
  PreviewOptions opt;
  opt.cfg.method_weights = {0, 0, 0, 0, 1};
  opt.out_path = dir / "a.png";
  const PreviewResult r = run_preview(opt);
  EXPECT_EQ(r.samples.size(), 5u);
  EXPECT_EQ(r.sheet.dims(), (Dims{2 * 64 + 3 * 2, 5 * 64 + 6 * 2}));
  opt.out_path = dir / "b.png";
  run_preview(opt);
  EXPECT_EQ(testing::read_text(dir / "a.png"), testing::read_text(dir / "b.png"));
}

TEST(Preview, ForcedLambdaGaussianReachesZero) {
  PreviewOptions opt;
  opt.cfg.method_weights = {0, 0, 0, 0, 1};
  opt.forced_lambda = 0.7;
  opt.rows = 2;
  opt.cols = 3;
  const PreviewResult r = render_preview(opt);
  for (const auto& s : r.samples) {
    EXPECT_EQ(s.plan.k, 1);
    EXPECT_EQ(s.plan.lambdas, std::vector<double>{0.7});
    const double lo = *std::min_element(s.mask.data().begin(), s.mask.data().end());
    EXPECT_EQ(lo, 0.0);
  }
}

TEST(Preview, Errors) {
  PreviewOptions opt;
  opt.rows = 3;
  EXPECT_THROW(render_preview(opt), ConfigError);
  opt.rows = 2;
  opt.forced_lambda = 1.5;
  EXPECT_THROW(render_preview(opt), ConfigError);
}

TEST(Bench, ThreeRowsAndTinyRuns) {
  BenchOptions opt;
  opt.num_samples = 1;
  opt.dims = {8, 8};
  const BenchReport r = run_bench(opt);
  EXPECT_EQ(r.rows[0].name, "identity");
  EXPECT_EQ(r.rows[1].name, "mixup");
  EXPECT_EQ(r.rows[2].name, "miamix");
  EXPECT_GT(r.ratio_vs_mixup, 0.0);
  std::ostringstream out;
  r.write(out);
  EXPECT_NE(out.str().find("ratio miamix/mixup"), std::string::npos);
  opt.num_samples = 0;
  EXPECT_THROW(run_bench(opt), ConfigError);
}

TEST(Bench, PlainMixupConfig) {
  const MiamixConfig cfg = plain_mixup_config(MiamixConfig{});
  EXPECT_EQ(cfg.k_choices, std::vector<int>{1});
  EXPECT_EQ(cfg.method_weights, (MethodWeights{1, 0, 0, 0, 0}));
}

TEST(Mix, RunWritesLogAndReplays) {
  TempDir dir("mixrun");
  MixOptions opt;
  opt.manifest = write_synthetic_dataset(dir / "data", 40, {16, 16}, 3, 5, 3).string();
  opt.out_dir = dir / "out";
  opt.batch_size = 16;
  opt.workers = 3;
  opt.cfg.seed = 4;
  const MixSummary s = run_mix(opt);
  EXPECT_EQ(s.count, 40u);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "mix_000039.png"));
  const ReplaySummary rep = run_replay(dir / "out" / "mixlog.jsonl", std::nullopt);
  EXPECT_EQ(rep.count, 40u);
  EXPECT_EQ(rep.mismatched, 0u);
}

TEST(Mix, ReplayFlagsTamperedOutput) {
  TempDir dir("tamper");
  MixOptions opt;
  opt.manifest = write_synthetic_dataset(dir / "data", 8, {12, 12}, 3, 2, 3).string();
  opt.out_dir = dir / "out";
  run_mix(opt);
  write_png(dir / "out" / "mix_000003.png", Image(12, 12, 3, 0.5f));
  const ReplaySummary rep = run_replay(dir / "out" / "mixlog.jsonl", std::nullopt);
  EXPECT_EQ(rep.mismatched, 1u);
  ASSERT_EQ(rep.mismatched_outputs.size(), 1u);
  EXPECT_EQ(rep.mismatched_outputs[0], "mix_000003.png");
}

}  // namespace
}  // namespace miamix
