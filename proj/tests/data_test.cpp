#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "seglab/data.hpp"
#include "seglab/pgm.hpp"

using namespace seglab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& leaf) {
  fs::path p = fs::temp_directory_path() / "seglab_data_test" / leaf;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.count = 30;
  cfg.height = 32;
  cfg.width = 32;
  cfg.radius_min = 3;
  cfg.radius_max = 8;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST(Data, SynthesisIsDeterministic) {
  Dataset a = gen_synthetic(small_config());
  Dataset b = gen_synthetic(small_config());
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].id, b.samples[i].id);
    EXPECT_EQ(a.samples[i].split, b.samples[i].split);
    EXPECT_EQ(a.samples[i].size_bucket, b.samples[i].size_bucket);
    EXPECT_TRUE(bitwise_equal(a.samples[i].image, b.samples[i].image));
    EXPECT_TRUE(bitwise_equal(a.samples[i].mask, b.samples[i].mask));
  }
  SynthConfig other = small_config();
  other.seed = 6;
  Dataset c = gen_synthetic(other);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    if (!bitwise_equal(a.samples[i].image, c.samples[i].image)) any_diff = true;
  EXPECT_TRUE(any_diff);
}

TEST(Data, SamplesAreWellFormed) {
  Dataset ds = gen_synthetic(small_config());
  ASSERT_EQ(ds.samples.size(), 30u);
  std::size_t foreground = 0;
  for (const SegSample& s : ds.samples) {
    ASSERT_EQ(s.image.shape(), (Shape{1, 32, 32}));
    ASSERT_EQ(s.mask.shape(), (Shape{1, 32, 32}));
    for (std::size_t i = 0; i < s.image.numel(); ++i) {
      ASSERT_GE(s.image[i], 0.0);
      ASSERT_LE(s.image[i], 1.0);
      ASSERT_TRUE(s.mask[i] == 0.0 || s.mask[i] == 1.0);
      if (s.mask[i] == 1.0) ++foreground;
    }
    ASSERT_GE(s.size_bucket, 0);
    ASSERT_LE(s.size_bucket, 6);
    // ids are fixed-width so lexicographic order is numeric order
    ASSERT_EQ(s.id.substr(0, 4), "img_");
  }
  EXPECT_GT(foreground, 0u);
}

TEST(Data, ForegroundIsBrighterThanBackground) {
  SynthConfig cfg = small_config();
  cfg.noise_std = 0.0;
  Dataset ds = gen_synthetic(cfg);
  for (const SegSample& s : ds.samples)
    for (std::size_t i = 0; i < s.image.numel(); ++i) {
      if (s.mask[i] == 1.0)
        ASSERT_DOUBLE_EQ(s.image[i], 0.75);
      else
        ASSERT_DOUBLE_EQ(s.image[i], 0.15);
    }
}

TEST(Data, SplitsCoverAllThreeAndRoughlyMatchRatios) {
  SynthConfig cfg = small_config();
  cfg.count = 200;
  Dataset ds = gen_synthetic(cfg);
  const double n = double(ds.samples.size());
  const double train = double(ds.split_indices("train").size());
  const double val = double(ds.split_indices("val").size());
  const double test = double(ds.split_indices("test").size());
  EXPECT_EQ(train + val + test, n);
  EXPECT_NEAR(train / n, 0.6, 0.12);
  EXPECT_NEAR(val / n, 0.2, 0.1);
  EXPECT_NEAR(test / n, 0.2, 0.1);
  // even tiny datasets must keep every split non-empty
  SynthConfig tiny = small_config();
  tiny.count = 5;
  Dataset small = gen_synthetic(tiny);
  EXPECT_FALSE(small.split_indices("train").empty());
  EXPECT_FALSE(small.split_indices("val").empty());
  EXPECT_FALSE(small.split_indices("test").empty());
}

TEST(Data, BucketsSpreadBySize) {
  SynthConfig cfg = small_config();
  cfg.count = 140;
  Dataset ds = gen_synthetic(cfg);
  std::set<int> seen;
  for (const SegSample& s : ds.samples) seen.insert(s.size_bucket);
  EXPECT_GE(seen.size(), 5u);  // quantile buckets over a varied population
}

TEST(Data, ConfigValidation) {
  SynthConfig cfg = small_config();
  cfg.deform = 0.6;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small_config();
  cfg.radius_max = 20.0;  // blob no longer fits a 32-pixel side
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small_config();
  cfg.blobs_min = 3;
  cfg.blobs_max = 2;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small_config();
  cfg.count = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Data, SaveLoadRoundTrip) {
  fs::path dir = temp_dir("roundtrip");
  Dataset ds = gen_synthetic(small_config());
  save_dataset(ds, dir);
  Dataset back = load_dataset(dir);
  ASSERT_EQ(back.samples.size(), ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const SegSample& a = ds.samples[i];
    const SegSample& b = back.samples[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.split, b.split);
    EXPECT_EQ(a.size_bucket, b.size_bucket);
    // masks are exact; images quantise to 16 bits on disk
    EXPECT_TRUE(bitwise_equal(a.mask, b.mask));
    for (std::size_t j = 0; j < a.image.numel(); ++j)
      ASSERT_NEAR(a.image[j], b.image[j], 0.5 / 65535.0 + 1e-12);
  }
  // a second save of the loaded data is byte-stable
  fs::path dir2 = temp_dir("roundtrip2");
  save_dataset(back, dir2);
  EXPECT_EQ(read_text(dir / "manifest.tsv"), read_text(dir2 / "manifest.tsv"));
  Dataset again = load_dataset(dir2);
  for (std::size_t i = 0; i < back.samples.size(); ++i)
    EXPECT_TRUE(bitwise_equal(back.samples[i].image, again.samples[i].image));
}

TEST(Data, ManifestErrorsNameTheLine) {
  fs::path dir = temp_dir("badmanifest");
  Dataset ds = gen_synthetic(small_config());
  save_dataset(ds, dir);
  std::string text = read_text(dir / "manifest.tsv");
  const std::size_t nl = text.find('\n', text.find('\n') + 1);
  text.insert(nl, "\textra_column");  // corrupt row 2
  write_text_atomic(dir / "manifest.tsv", text);
  try {
    load_dataset(dir);
    FAIL() << "expected data error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos)
        << e.what();
  }
}

TEST(Data, MaskFilesMustBeBinary) {
  fs::path dir = temp_dir("badmask");
  Dataset ds = gen_synthetic(small_config());
  save_dataset(ds, dir);
  // rewrite the first mask with a mid-grey sample
  PgmImage img = read_pgm(dir / "masks" / (ds.samples[0].id + ".pgm"));
  img.samples[0] = 1234;
  write_pgm(dir / "masks" / (ds.samples[0].id + ".pgm"), img);
  try {
    load_dataset(dir);
    FAIL() << "expected data error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Data);
  }
}

TEST(Pgm, RoundTripIsLossless) {
  fs::path dir = temp_dir("pgm");
  PgmImage img{7, 5, {}};
  img.samples.resize(35);
  for (std::size_t i = 0; i < img.samples.size(); ++i)
    img.samples[i] = std::uint16_t(i * 1871 % 65536);
  write_pgm(dir / "x.pgm", img);
  PgmImage back = read_pgm(dir / "x.pgm");
  EXPECT_EQ(back.width, img.width);
  EXPECT_EQ(back.height, img.height);
  EXPECT_EQ(back.samples, img.samples);
}

TEST(Pgm, ParserReportsByteOffsets) {
  try {
    parse_pgm("P5\n4 4\n255\n", "eight_bit.pgm");
    FAIL() << "expected format error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Format);
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
  EXPECT_THROW(parse_pgm("P2\n4 4\n65535\n", "ascii.pgm"), Error);
  // header fine, payload short by one byte
  std::string bytes = "P5\n2 1\n65535\n";
  bytes += std::string(3, '\0');
  EXPECT_THROW(parse_pgm(bytes, "short.pgm"), Error);
  // comments and arbitrary whitespace are fine
  std::string ok = "P5 # comment\n# another\n 2\t1 \n65535\n";
  ok += std::string(4, '\0');
  PgmImage img = parse_pgm(ok, "ok.pgm");
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.height, 1u);
}

TEST(Data, PatchGridCoversImageWithClampedTail) {
  SynthConfig cfg = small_config();
  cfg.count = 6;
  Dataset ds = gen_synthetic(cfg);
  Dataset patches = extract_patches(ds, 20, 20, 12, 12);
  // starts along each axis of a 32-pixel side: 0 then clamp to 12
  ASSERT_EQ(patches.samples.size(), ds.samples.size() * 4);
  EXPECT_EQ(patches.samples[0].id, ds.samples[0].id + "_p0_0");
  EXPECT_EQ(patches.samples[3].id, ds.samples[0].id + "_p1_1");
  for (const SegSample& p : patches.samples) {
    ASSERT_EQ(p.image.shape(), (Shape{1, 20, 20}));
    ASSERT_EQ(p.mask.shape(), (Shape{1, 20, 20}));
  }
  // patch content matches the source crop: check the clamped corner patch
  const SegSample& src = ds.samples[0];
  const SegSample& corner = patches.samples[3];
  for (std::size_t y = 0; y < 20; ++y)
    for (std::size_t x = 0; x < 20; ++x)
      ASSERT_DOUBLE_EQ(corner.image[y * 20 + x],
                       src.image[(12 + y) * 32 + 12 + x]);
  // split is inherited from the source image
  for (std::size_t i = 0; i < patches.samples.size(); ++i)
    EXPECT_EQ(patches.samples[i].split, ds.samples[i / 4].split);
  // exact cover: stride equal to patch, image divisible
  Dataset exact = extract_patches(ds, 16, 16, 16, 16);
  EXPECT_EQ(exact.samples.size(), ds.samples.size() * 4);
  EXPECT_THROW(extract_patches(ds, 40, 40, 8, 8), Error);
  EXPECT_THROW(extract_patches(ds, 16, 16, 0, 16), Error);
}

TEST(Data, MakeBatchStacksSamples) {
  Dataset ds = gen_synthetic(small_config());
  auto [images, masks] = make_batch(ds, {0, 2, 4});
  ASSERT_EQ(images.shape(), (Shape{3, 1, 32, 32}));
  ASSERT_EQ(masks.shape(), (Shape{3, 1, 32, 32}));
  for (std::size_t i = 0; i < 32 * 32; ++i) {
    ASSERT_DOUBLE_EQ(images[32 * 32 + i], ds.samples[2].image[i]);
    ASSERT_DOUBLE_EQ(masks[2 * 32 * 32 + i], ds.samples[4].mask[i]);
  }
}
