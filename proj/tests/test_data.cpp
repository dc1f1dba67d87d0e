#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <opencv2/imgcodecs.hpp>

#include "daml/data/augment.hpp"
#include "daml/data/dataset.hpp"
#include "daml/data/sampler.hpp"
#include "daml/data/synthetic.hpp"
#include "daml/error.hpp"

namespace fs = std::filesystem;
using namespace daml;
using namespace daml::data;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("daml_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Image gradient_image(int h, int w) {
  Image img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<std::uint8_t>((y * 7 + x * 13 + c * 50) % 256);
  return img;
}

}  // namespace

TEST(MarketName, ParsesIdentityAndCamera) {
  const SampleMeta m = parse_market_filename("0001_c1s1_000151_00.jpg");
  EXPECT_EQ(m.person_id, 1);
  EXPECT_EQ(m.camera_id, 1);
  EXPECT_FALSE(m.is_distractor());
}

TEST(MarketName, DistractorHasNegativeId) {
  const SampleMeta m = parse_market_filename("-1_c3s2_000001_00.jpg");
  EXPECT_EQ(m.person_id, -1);
  EXPECT_EQ(m.camera_id, 3);
  EXPECT_TRUE(m.is_distractor());
}

TEST(MarketName, RejectsOtherNames) {
  for (const char* name : {"banner.png", "0001_c1_000151_00.jpg", "abc_c1s1_000151_00.jpg", ""}) {
    try {
      parse_market_filename(name);
      FAIL() << name;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::MalformedName);
    }
  }
}

TEST(MarketDir, LoadsSortedAndSkipsJunk) {
  const fs::path dir = scratch_dir("market");
  const cv::Mat img(20, 10, CV_8UC3, cv::Scalar(10, 20, 30));
  for (const char* name : {"0002_c2s1_000001_00.jpg", "0001_c1s1_000001_00.jpg", "-1_c3s1_000001_00.jpg"})
    cv::imwrite((dir / name).string(), img);
  std::ofstream(dir / "Thumbs.db") << "x";

  const Dataset a = load_market_dir(dir, Domain::Target, {16, 8});
  const Dataset b = load_market_dir(dir, Domain::Target, {16, 8});
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a.samples(), b.samples());
  EXPECT_EQ(a.images(), b.images());
  EXPECT_EQ(a.image(0).size(), (ImageSize{16, 8}));
  EXPECT_EQ(a.num_identities(), 2u);  // distractor not an identity
  // Pixels arrive as RGB.
  EXPECT_EQ(a.image(0).at(0, 0, 0), 30);
  EXPECT_EQ(a.image(0).at(0, 0, 2), 10);
}

TEST(Synthetic, CountsMatchConfig) {
  SyntheticConfig cfg;
  const SyntheticDomains d = generate_synthetic_domains(cfg);
  EXPECT_EQ(d.source.size(), 160u);
  EXPECT_EQ(d.source.num_identities(), 20u);
  EXPECT_EQ(d.target.size(), 160u);
  EXPECT_EQ(d.source.domain(), Domain::Source);
  EXPECT_EQ(d.target.domain(), Domain::Target);
}

TEST(Synthetic, DeterministicAndDisjoint) {
  SyntheticConfig cfg;
  cfg.n_ids = 6;
  cfg.per_id = 3;
  const SyntheticDomains a = generate_synthetic_domains(cfg);
  const SyntheticDomains b = generate_synthetic_domains(cfg);
  EXPECT_EQ(a.source.images(), b.source.images());
  EXPECT_EQ(a.target.images(), b.target.images());
  EXPECT_EQ(a.target.samples(), b.target.samples());

  const auto src = a.source.person_ids();
  const auto tgt = a.target.person_ids();
  const std::set<int> s(src.begin(), src.end());
  for (int id : tgt) EXPECT_EQ(s.count(id), 0u);

  cfg.seed = 1;
  EXPECT_NE(generate_synthetic_domains(cfg).source.images(), a.source.images());
}

TEST(Synthetic, RejectsBadCounts) {
  for (auto [ids, per] : {std::pair{0, 8}, {20, 0}, {1, 8}, {20, 1}}) {
    SyntheticConfig cfg;
    cfg.n_ids = ids;
    cfg.per_id = per;
    try {
      generate_synthetic_domains(cfg);
      FAIL() << ids << "," << per;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
    }
  }
}

TEST(Manifest, RoundTrips) {
  SyntheticConfig cfg;
  cfg.n_ids = 3;
  cfg.per_id = 2;
  const SyntheticDomains d = generate_synthetic_domains(cfg);
  const fs::path dir = scratch_dir("manifest");
  write_manifest_dataset(d.target, dir);
  ASSERT_TRUE(is_manifest_dataset(dir));
  const Dataset back = read_manifest_dataset(dir, cfg.image_size);
  EXPECT_EQ(back.images(), d.target.images());
  ASSERT_EQ(back.size(), d.target.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back.sample(i).person_id, d.target.sample(i).person_id);
    EXPECT_EQ(back.sample(i).camera_id, d.target.sample(i).camera_id);
  }
}

TEST(Split, FirstImageOfEachIdentityIsQuery) {
  SyntheticConfig cfg;
  cfg.n_ids = 4;
  cfg.per_id = 3;
  const Dataset t = generate_synthetic_domains(cfg).target;
  const RetrievalSplit split = split_first_per_identity(t);
  EXPECT_EQ(split.query.size(), 4u);
  EXPECT_EQ(split.gallery.size(), 8u);
}

TEST(PkSampler, BatchShape) {
  Labels labels;
  for (int c = 0; c < 20; ++c)
    for (int i = 0; i < 5; ++i) labels.push_back(c);
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const PkBatch b = pk_sample(labels, 16, 4, rng);
    ASSERT_EQ(b.indices.size(), 64u);
    ASSERT_EQ(b.labels.size(), 64u);
    std::map<int, int> per_class;
    for (std::size_t i = 0; i < b.indices.size(); ++i) {
      EXPECT_EQ(labels[b.indices[i]], b.labels[i]);
      ++per_class[b.labels[i]];
    }
    EXPECT_EQ(per_class.size(), 16u);
    for (const auto& [c, n] : per_class) EXPECT_EQ(n, 4);
  }
}

TEST(PkSampler, SmallDataset) {
  const Labels labels{0, 0, 1, 1};
  Rng rng(0);
  const PkBatch b = pk_sample(labels, 2, 2, rng);
  EXPECT_EQ(b.indices.size(), 4u);
  EXPECT_EQ(std::set<int>(b.labels.begin(), b.labels.end()).size(), 2u);
}

TEST(PkSampler, SingletonClassRepeats) {
  const Labels labels{0, 1, 1, 1, 1};
  Rng rng(0);
  const PkBatch b = pk_sample(labels, 2, 4, rng);
  int zero = 0;
  for (std::size_t i = 0; i < b.indices.size(); ++i)
    if (b.labels[i] == 0) {
      EXPECT_EQ(b.indices[i], 0u);
      ++zero;
    }
  EXPECT_EQ(zero, 4);
}

TEST(PkSampler, OutliersNeverSampledAndShortageRaises) {
  const Labels labels{-1, -1, 0, 0, 1, 1, -1};
  Rng rng(5);
  for (int t = 0; t < 20; ++t)
    for (int l : pk_sample(labels, 2, 3, rng).labels) EXPECT_GE(l, 0);
  try {
    pk_sample(labels, 3, 2, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientClasses);
  }
}

TEST(Augment, IdentityPolicyIsNoOp) {
  const Image img = gradient_image(32, 16);
  Rng rng(0);
  for (int t = 0; t < 10; ++t) EXPECT_EQ(augment(img, AugmentPolicy::identity({32, 16}), rng), img);
}

TEST(Augment, FlipIsInvolution) {
  const Image img = gradient_image(32, 16);
  EXPECT_NE(horizontal_flip(img), img);
  EXPECT_EQ(horizontal_flip(horizontal_flip(img)), img);
  AugmentPolicy forced = AugmentPolicy::identity({32, 16});
  forced.flip_prob = 1.0;
  Rng rng(0);
  EXPECT_EQ(augment(augment(img, forced, rng), forced, rng), img);
}

TEST(Augment, EraseChangesOnlyItsRectangle) {
  const Image img = gradient_image(32, 16);
  AugmentPolicy policy = AugmentPolicy::identity({32, 16});
  policy.erase_prob = 1.0;
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    Image out = img;
    const Rect r = random_erase(out, policy, rng);
    ASSERT_GT(r.height * r.width, 0);
    bool changed = false;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 16; ++x)
        for (int c = 0; c < 3; ++c) {
          if (!r.contains(y, x)) {
            ASSERT_EQ(out.at(y, x, c), img.at(y, x, c));
          } else if (out.at(y, x, c) != img.at(y, x, c)) {
            changed = true;
          }
        }
    EXPECT_TRUE(changed);
  }
}

TEST(Augment, CropKeepsSize) {
  const Image img = gradient_image(32, 16);
  AugmentPolicy policy;
  policy.image_size = {32, 16};
  policy.crop_enabled = true;
  Rng rng(2);
  for (int t = 0; t < 10; ++t) EXPECT_EQ(augment(img, policy, rng).size(), (ImageSize{32, 16}));
}

TEST(Input, NormalizationLayout) {
  Image img(2, 1);
  img.at(0, 0, 0) = 255;
  img.at(1, 0, 2) = 0;
  const Matrix x = to_input(img);
  ASSERT_EQ(x.cols(), 6);
  EXPECT_DOUBLE_EQ(x(0, 0), (1.0 - kPixelMean) / kPixelStd);  // channel 0, row 0
  EXPECT_DOUBLE_EQ(x(0, 5), (0.0 - kPixelMean) / kPixelStd);  // channel 2, row 1
}
