// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/synth_data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "test_support.hpp"

namespace prosfda {
namespace {

using testing::TempDir;

DomainRecipe small_recipe() {
  DomainRecipe r;
  r.height = 8;
  r.width = 6;
  r.num_images = 3;
  r.num_classes = 4;
  r.input_dim = 5;
  return r;
}

TEST(BuildDomain, ShiftIsPairwiseRotationPlusOffset) {
  DomainRecipe r = small_recipe();
  r.rotation_deg = 90.0;
  r.offset = 0.25;
  const DomainSpec s = build_domain(r);
  const std::size_t n = 5;
  EXPECT_NEAR(s.shift_matrix[0 * n + 1], -1.0, 1e-15);
  EXPECT_NEAR(s.shift_matrix[1 * n + 0], 1.0, 1e-15);
  EXPECT_NEAR(s.shift_matrix[2 * n + 2], 0.0, 1e-15);
  EXPECT_EQ(s.shift_matrix[4 * n + 4], 1.0);
  EXPECT_EQ(s.shift_offset, std::vector<double>(5, 0.25));

  // Orthogonality: A^T A = I.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += s.shift_matrix[k * n + i] * s.shift_matrix[k * n + j];
      EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-15);
    }
  }
}

TEST(BuildDomain, MeansDependOnlyOnSeed) {
  DomainRecipe a = small_recipe(), b = small_recipe();
  b.rotation_deg = 10.0;
  EXPECT_EQ(build_domain(a).class_means, build_domain(b).class_means);
  b.seed = a.seed + 1;
  EXPECT_NE(build_domain(a).class_means, build_domain(b).class_means);
}

TEST(BuildDomain, RejectsBadRecipes) {
  DomainRecipe r = small_recipe();
  r.rare_class = 9;
  EXPECT_THROW(build_domain(r), ValueError);
  r = small_recipe();
  r.num_classes = 1;
  EXPECT_THROW(build_domain(r), ValueError);

  DomainSpec s = build_domain(small_recipe());
  s.shift_matrix = RealArray({5, 5});
  EXPECT_THROW(s.validate(), ValueError);
}

TEST(GenerateDomain, TargetIsAffineImageOfSourceUnderSameDraws) {
  const DomainSpec s = build_domain(small_recipe());
  Rng a(5, 9), b(5, 9);
  const auto src = generate_domain(s, a, false);
  const auto tgt = generate_domain(s, b, true);
  ASSERT_EQ(src.size(), 3u);
  for (std::size_t i = 0; i < src.size(); ++i) {
    EXPECT_EQ(src[i].labels, tgt[i].labels);
    for (std::size_t px = 0; px < src[i].labels.size(); ++px) {
      auto x = src[i].pixels.row(px);
      auto y = tgt[i].pixels.row(px);
      for (std::size_t r = 0; r < 5; ++r) {
        double acc = s.shift_offset[r];
        for (std::size_t k = 0; k < 5; ++k) acc += s.shift_matrix[r * 5 + k] * x[k];
        EXPECT_NEAR(y[r], acc, 1e-12);
      }
    }
  }
}

TEST(GenerateDomain, ZeroNoisePixelsEqualClassMeans) {
  DomainRecipe r = small_recipe();
  r.noise_std = 0.0;
  const DomainSpec s = build_domain(r);
  const Dataset d = generate_source(r);
  for (const auto& img : d.images) {
    for (std::size_t px = 0; px < img.labels.size(); ++px) {
      auto m = s.class_means.row(static_cast<std::size_t>(img.labels[px]));
      for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(img.pixels.row(px)[k], m[k]);
    }
  }
}

TEST(GenerateDomain, ShapesLabelsAndDeterminism) {
  const DomainRecipe r = small_recipe();
  const Dataset a = generate_source(r), b = generate_source(r);
  ASSERT_EQ(a.images.size(), 3u);
  EXPECT_EQ(a.num_classes, 4u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.images[i].pixels.shape(), (Shape{8, 6, 5}));
    EXPECT_EQ(a.images[i].pixels, b.images[i].pixels);
    EXPECT_EQ(a.images[i].labels, b.images[i].labels);
    for (auto l : a.images[i].labels.labels) {
      EXPECT_GE(l, 0);
      EXPECT_LT(l, 4);
    }
  }
  const Dataset t = generate_target(r);
  EXPECT_NE(t.images[0].labels, a.images[0].labels);
}

TEST(GenerateDomain, RareClassIsRarer) {
  DomainRecipe r;
  r.num_images = 40;
  r.height = r.width = 8;
  r.rare_class = 2;
  r.rare_weight = 0.1;
  const Dataset d = generate_source(r);
  std::vector<std::size_t> counts(r.num_classes, 0);
  for (const auto& img : d.images) {
    for (auto l : img.labels.labels) ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t c = 0; c < r.num_classes; ++c) {
    if (c != 2) EXPECT_LT(counts[2] * 3, counts[c]);
  }
}

TEST(Recipe, TextRoundTrip) {
  DomainRecipe r = small_recipe();
  r.rotation_deg = 33.3;
  r.noise_std = 0.1 + 0.2;
  r.rare_class = 1;
  EXPECT_EQ(parse_domain_recipe(to_text(r)), r);
}

TEST(Recipe, ParsingRules) {
  const DomainRecipe r = parse_domain_recipe("# comment\n  height = 16 \n\nrotation_deg=12.5 # tail\n");
  EXPECT_EQ(r.height, 16u);
  EXPECT_EQ(r.rotation_deg, 12.5);
  EXPECT_EQ(r.width, 32u);
  EXPECT_THROW(parse_domain_recipe("colour = red\n"), ConfigError);
  EXPECT_THROW(parse_domain_recipe("height = 4\nheight = 5\n"), ConfigError);
  EXPECT_THROW(parse_domain_recipe("height = -4\n"), ConfigError);
  EXPECT_THROW(parse_domain_recipe("offset = abc\n"), ConfigError);
  EXPECT_THROW(parse_domain_recipe("offset\n"), ConfigError);
}

TEST(DatasetContainer, RoundTripAndPixelOnlyLoad) {
  TempDir dir("synth");
  const Dataset d = generate_target(small_recipe());
  const std::string path = dir.file("d.bin");
  save_dataset(path, d);
  const Dataset back = load_dataset(path);
  ASSERT_EQ(back.images.size(), d.images.size());
  EXPECT_EQ(back.num_classes, d.num_classes);
  for (std::size_t i = 0; i < d.images.size(); ++i) {
    EXPECT_EQ(back.images[i].pixels, d.images[i].pixels);
    EXPECT_EQ(back.images[i].labels, d.images[i].labels);
  }
  const UnlabeledDataset px = load_dataset_pixels(path);
  ASSERT_EQ(px.images.size(), d.images.size());
  for (std::size_t i = 0; i < d.images.size(); ++i) EXPECT_EQ(px.images[i], d.images[i].pixels);
}

TEST(DatasetContainer, RejectsCorruptFiles) {
  TempDir dir("synth_bad");
  const std::string path = dir.file("d.bin");
  save_dataset(path, generate_source(small_recipe()));
  {
    std::ofstream os(path, std::ios::binary | std::ios::app);
    os << 'x';
  }
  EXPECT_THROW(load_dataset(path), DataError);
  EXPECT_THROW(load_dataset_pixels(path), DataError);
  {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << "PSFDAXX1";
  }
  EXPECT_THROW(load_dataset(path), DataError);
  EXPECT_THROW(load_dataset(dir.file("missing.bin")), DataError);
}

TEST(DatasetContainer, PathHelpers) {
  EXPECT_EQ(source_dataset_path("out/bench"), "out/bench.src.bin");
  EXPECT_EQ(target_dataset_path("out/bench"), "out/bench.tgt.bin");
}

}  // namespace
}  // namespace prosfda
