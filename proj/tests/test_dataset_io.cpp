#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

namespace miamix {
namespace {

using testing::Gen;
using testing::TempDir;

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_bytes(const std::filesystem::path& p, const std::string& text) {
  write_bytes(p, std::vector<unsigned char>(text.begin(), text.end()));
}

std::string error_text(const std::string& manifest) {
  std::istringstream in(manifest);
  try {
    parse_manifest(in);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

TEST(Manifest, Examples) {
  std::istringstream in(
      "{\"num_classes\": 10}\n"
      "{\"path\": \"a.png\", \"label\": 3}\n"
      "\n"
      "{\"path\": \"/abs/b.png\", \"label\": 9}\n");
  const Manifest m = parse_manifest(in, "/data/set");
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.num_classes, 10u);
  EXPECT_EQ(m.entries[0].path, "/data/set/a.png");
  EXPECT_EQ(m.entries[0].class_index, 3u);
  EXPECT_EQ(m.entries[1].path, "/abs/b.png");
}

TEST(Manifest, ClassCountInferredWithoutHeader) {
  std::istringstream in("{\"path\": \"a.png\", \"label\": 4}\n{\"path\": \"b.png\", \"label\": 1}\n");
  EXPECT_EQ(parse_manifest(in).num_classes, 5u);
}

TEST(Manifest, ErrorsCarryLineNumbers) {
  EXPECT_NE(error_text("{\"path\": \"a.png\", \"label\": 0}\n{oops\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_text("{\"path\": \"a.png\"}\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_text("{\"num_classes\": 2}\n{\"path\": \"a.png\", \"label\": 2}\n").find("line 2"),
            std::string::npos);
  EXPECT_NE(error_text("{\"path\": \"a.png\", \"label\": -1}\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_text("[1, 2]\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_text("{\"path\": 3, \"label\": 0}\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_text("{\"path\": \"a\", \"label\": 0}\n{\"num_classes\": 3}\n").find("line 2"),
            std::string::npos);
  EXPECT_NE(error_text("").find("no entries"), std::string::npos);
}

TEST(Manifest, MissingFileIsIoError) {
  EXPECT_THROW(load_manifest("/nonexistent/manifest.jsonl"), IoError);
}

TEST(Decode, BinaryPgm) {
  TempDir dir("pgm");
  std::string text = "P5\n# comment\n2 2\n255\n";
  text += std::string{'\0', '\xff', '\0', '\xff'};
  write_bytes(dir / "a.pgm", text);
  const Image im = decode_image((dir / "a.pgm").string());
  EXPECT_EQ(im.dims(), (Dims{2, 2}));
  EXPECT_EQ(im.channels(), 1);
  EXPECT_EQ(testing::vec(im.data()), (std::vector<float>{0.0f, 1.0f, 0.0f, 1.0f}));
}

TEST(Decode, BinaryPpm) {
  TempDir dir("ppm");
  std::string text = "P6 1 2 255\n";
  text += std::string{'\xff', '\0', '\0', '\0', '\0', '\xff'};
  write_bytes(dir / "a.ppm", text);
  const Image im = decode_image((dir / "a.ppm").string());
  EXPECT_EQ(im.dims(), (Dims{2, 1}));
  EXPECT_EQ(im.channels(), 3);
  EXPECT_EQ(im.at(0, 0, 0), 1.0f);
  EXPECT_EQ(im.at(1, 0, 2), 1.0f);
  EXPECT_EQ(im.at(1, 0, 0), 0.0f);
}

TEST(Decode, OneByOneWhitePng) {
  // Hand-assembled 8-bit grayscale PNG with a single 0xff pixel.
  const std::vector<unsigned char> png = {
      0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00,
      0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x00, 0x00, 0x00, 0x00, 0x3a, 0x7e, 0x9b, 0x55, 0x00,
      0x00, 0x00, 0x0a, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8, 0x0f, 0x00, 0x01, 0x01, 0x01, 0x00,
      0xb1, 0x38, 0xf6, 0x14, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
  TempDir dir("png1");
  write_bytes(dir / "w.png", png);
  const Image im = decode_image((dir / "w.png").string());
  EXPECT_EQ(im.dims(), (Dims{1, 1}));
  EXPECT_EQ(im.channels(), 1);
  EXPECT_EQ(im.at(0, 0, 0), 1.0f);
}

TEST(Decode, Errors) {
  TempDir dir("bad");
  Gen gen(1);
  auto bytes = encode_png(gen.image({8, 8}, 3));
  bytes.resize(bytes.size() / 2);
  write_bytes(dir / "trunc.png", bytes);
  EXPECT_THROW(decode_image((dir / "trunc.png").string()), DecodeError);
  write_bytes(dir / "junk.bin", std::string("hello world"));
  EXPECT_THROW(decode_image((dir / "junk.bin").string()), DecodeError);
  write_bytes(dir / "short.pgm", std::string("P5\n4 4\n255\n\x01\x02"));
  EXPECT_THROW(decode_image((dir / "short.pgm").string()), DecodeError);
  write_bytes(dir / "deep.pgm", std::string("P5\n1 1\n70000\n\x01\x02"));
  EXPECT_THROW(decode_image((dir / "deep.pgm").string()), DecodeError);
  EXPECT_THROW(decode_image((dir / "missing.png").string()), IoError);
}

TEST(Codec, RoundTripWithinQuantization) {
  TempDir dir("rt");
  Gen gen(2);
  for (int i = 0; i < 50; ++i) {
    const Image im = gen.image(gen.dims(1, 40), gen.coin() ? 3 : 1);
    write_png(dir / "x.png", im);
    const Image back = decode_image((dir / "x.png").string());
    ASSERT_EQ(back.dims(), im.dims());
    ASSERT_EQ(back.channels(), im.channels());
    for (std::size_t k = 0; k < im.data().size(); ++k) {
      ASSERT_LE(std::abs(back.data()[k] - im.data()[k]), 0.5f / 255.0f + 1e-6f);
    }
    // A decoded image re-encodes to identical bytes.
    ASSERT_EQ(encode_png(back), detail::read_file((dir / "x.png").string()));
  }
}

TEST(Codec, QuantizeRoundsHalfToEven) {
  EXPECT_EQ(detail::quantize(0.5f), 128);
  EXPECT_EQ(detail::quantize(0.25f), 64);
  EXPECT_EQ(detail::quantize(-0.1f), 0);
  EXPECT_EQ(detail::quantize(0.0f), 0);
  EXPECT_EQ(detail::quantize(1.0f), 255);
}

TEST(Sidecar, JsonRoundTrip) {
  SidecarRecord r;
  r.output_path = "mix_000007.png";
  r.source_paths = {"/a.png", "/b.png"};
  r.plan.index_first = 3;
  r.plan.index_partner = 5;
  r.plan.k = 2;
  r.plan.methods = {GeneratorKind::FMix, GeneratorKind::AGMix};
  r.plan.lambdas = {0.1234567890123456, 0.3};
  r.plan.residual = 1.0 - 0.1234567890123456 - 0.3;
  r.plan.mask_aug_draws = {MaskAugDecision{true, 0.1, -0.2, 0.05, 5}, MaskAugDecision{}};
  r.plan.seed = 0xfedcba9876543210ull;
  r.plan.stream_id = 7;
  r.plan.partner_stream_id = 9;
  r.plan.first_view = {true, 4, 1, 8};
  r.merge_mode = MergeMode::ClippedSum;
  r.generators.fmix_decay = 2.5;
  r.generators.grid_max = 6;
  r.lambda_merged = 0.612345678901234;
  r.merged_label = SoftLabel({0.612345678901234, 0.387654321098766});
  const SidecarRecord back = sidecar_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.output_path, r.output_path);
  EXPECT_EQ(back.source_paths, r.source_paths);
  EXPECT_EQ(back.plan.methods, r.plan.methods);
  EXPECT_EQ(back.plan.lambdas, r.plan.lambdas);
  EXPECT_EQ(back.plan.residual, r.plan.residual);
  EXPECT_EQ(back.plan.mask_aug_draws, r.plan.mask_aug_draws);
  EXPECT_EQ(back.plan.seed, r.plan.seed);
  EXPECT_EQ(back.plan.first_view, r.plan.first_view);
  EXPECT_EQ(back.plan.partner_view, r.plan.partner_view);
  EXPECT_EQ(back.merge_mode, r.merge_mode);
  EXPECT_EQ(back.generators.fmix_decay, 2.5);
  EXPECT_EQ(back.generators.grid_max, 6);
  EXPECT_EQ(back.lambda_merged, r.lambda_merged);
  EXPECT_EQ(back.merged_label, r.merged_label);
}

TEST(Sidecar, MalformedLogReportsLine) {
  TempDir dir("log");
  write_bytes(dir / "mixlog.jsonl", std::string("\n{\"output_path\": \"x\"}\n"));
  try {
    load_mixlog((dir / "mixlog.jsonl").string());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Outputs, OneSampleWritesImageAndRecord) {
  TempDir dir("enc");
  Gen gen(3);
  const std::vector<Image> images{gen.image({12, 12}, 3)};
  write_png(dir / "src.png", images[0]);
  const std::vector<Image> decoded{decode_image((dir / "src.png").string())};
  const std::vector<SoftLabel> labels{make_one_hot(1, 3)};
  MiamixConfig cfg;
  cfg.seed = 5;
  const auto samples = mix_batch(decoded, labels, cfg, {.stream_offset = 42});
  const std::vector<std::string> sources{(dir / "src.png").string()};
  const auto records = encode_outputs(samples, sources, dir / "out", cfg);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].output_path, "mix_000042.png");
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "mix_000042.png"));
  const auto log = load_mixlog((dir / "out" / "mixlog.jsonl").string());
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].plan.stream_id, 42u);
  EXPECT_EQ(log[0].lambda_merged, samples[0].lambda_merged);
}

TEST(Replay, RebuildsOutputsFromLogAlone) {
  TempDir dir("replay");
  Gen gen(4);
  std::vector<Image> decoded;
  std::vector<SoftLabel> labels;
  std::vector<std::string> sources;
  for (int i = 0; i < 24; ++i) {
    const auto path = dir / ("s" + std::to_string(i) + ".png");
    write_png(path, gen.image({20, 20}, 3));
    sources.push_back(path.string());
    decoded.push_back(decode_image(path.string()));
    labels.push_back(make_one_hot(static_cast<std::size_t>(i % 4), 4));
  }
  MiamixConfig cfg;
  cfg.seed = 99;
  cfg.mask_aug.p_aug = 0.8;
  const auto samples = mix_batch(decoded, labels, cfg, {.batch_index = 2, .stream_offset = 100});
  encode_outputs(samples, sources, dir / "out", cfg);
  const auto log = load_mixlog((dir / "out" / "mixlog.jsonl").string());
  ASSERT_EQ(log.size(), samples.size());
  for (const auto& record : log) {
    const ReplayResult r = replay_record(record);
    ASSERT_EQ(r.lambda_merged, record.lambda_merged);
    ASSERT_EQ(encode_png(r.image), detail::read_file((dir / "out" / record.output_path).string()));
  }
}

}  // namespace
}  // namespace miamix
