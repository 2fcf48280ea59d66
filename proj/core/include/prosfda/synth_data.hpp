// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "prosfda/numerics.hpp"

namespace prosfda {

/// Fully explicit description of one source/target domain pair.
struct DomainSpec {
  std::size_t num_classes = 0;
  std::size_t input_dim = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t num_images = 0;
  RealArray class_means;              ///< C x input_dim
  double noise_std = 0.0;             ///< isotropic Gaussian noise around the class mean
  RealArray shift_matrix;             ///< input_dim x input_dim, target x' = A x + b
  std::vector<double> shift_offset;   ///< b, length input_dim
  std::size_t regions_per_image = 8;  ///< Voronoi sites per label map
  std::vector<double> class_weights;  ///< sampling weight of each class per site

  void validate() const;
};

/// Compact generator parameters, the contents of a `gen-data` spec file.
/// Class means are N(0, mean_spread^2) draws; the shift rotates each
/// consecutive coordinate pair (0,1), (2,3), ... by rotation_deg and adds
/// `offset` to every coordinate.
struct DomainRecipe {
  std::size_t num_classes = 5;
  std::size_t input_dim = 8;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t num_images = 20;
  std::uint64_t seed = 2024;
  double mean_spread = 1.0;
  double noise_std = 0.35;
  double rotation_deg = 45.0;
  double offset = 0.5;
  std::size_t regions_per_image = 8;
  int rare_class = -1;  ///< class sampled with rare_weight instead of 1; -1 disables
  double rare_weight = 0.2;

  bool operator==(const DomainRecipe&) const = default;
};

DomainSpec build_domain(const DomainRecipe& recipe);

/// Flat `key = value` text; unknown keys throw ConfigError.
DomainRecipe parse_domain_recipe(std::string_view text);
DomainRecipe load_domain_recipe(const std::string& path);
std::string to_text(const DomainRecipe& recipe);

struct LabeledImage {
  RealArray pixels;  ///< H x W x input_dim
  LabelMap labels;   ///< ground truth
};

/// A labelled dataset. Target-domain ground truth only ever reaches
/// evaluation code; adaptation consumes UnlabeledDataset.
struct Dataset {
  std::size_t num_classes = 0;
  std::vector<LabeledImage> images;
};

struct UnlabeledDataset {
  std::size_t num_classes = 0;
  std::vector<RealArray> images;
};

/// Draws spec.num_images images from `rng`: a Voronoi label map per image,
/// then class mean + noise per pixel; target images get the affine shift.
std::vector<LabeledImage> generate_domain(const DomainSpec& spec, Rng& rng, bool is_target);

/// Source and target datasets for a recipe, using RNG streams 1 and 2 of
/// recipe.seed (stream 0 draws the class means).
Dataset generate_source(const DomainRecipe& recipe);
Dataset generate_target(const DomainRecipe& recipe);

// Dataset container ("PSFDADS1"), little-endian:
//   magic[8] num_classes height width channels count        (u64 each)
//   count x { pixels[height*width*channels] (f64), labels[height*width] (i32) }
// The file length must match the header exactly.
void save_dataset(const std::string& path, const Dataset& dataset);
Dataset load_dataset(const std::string& path);
/// Reads only the pixel payload; labels are skipped without being decoded.
UnlabeledDataset load_dataset_pixels(const std::string& path);

std::string source_dataset_path(std::string_view prefix);
std::string target_dataset_path(std::string_view prefix);

}  // namespace prosfda
