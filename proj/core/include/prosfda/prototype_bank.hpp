// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "prosfda/numerics.hpp"
#include "prosfda/segmenter.hpp"

namespace prosfda {

/// One feature prototype per class. A class is valid once it has received at
/// least one pixel; rows of invalid classes are zero and never read.
struct PrototypeBank {
  RealArray protos;                 ///< C x D
  std::vector<std::uint8_t> valid;  ///< one flag per class
  double alpha = 0.99;

  std::size_t num_classes() const { return protos.rank() == 2 ? protos.dim(0) : 0; }
  std::size_t feature_dim() const { return protos.rank() == 2 ? protos.dim(1) : 0; }
  bool any_valid() const;

  bool operator==(const PrototypeBank&) const = default;
};

/// Per-pixel, per-class cosine similarity to the prototypes (H x W x C).
/// Entries for invalid classes are -1; class_valid mirrors the bank.
struct WeightMap {
  RealArray values;
  std::vector<std::uint8_t> class_valid;
};

struct BatchPrototypes {
  RealArray protos;                  ///< C x D masked means; rows with count 0 are zero
  std::vector<std::uint64_t> counts;  ///< pixels per class
};

/// Masked per-class feature mean over a batch of H x W x D feature maps
/// labelled by the matching pseudo-label maps. Sums run image by image in
/// row-major pixel order, then each row is divided by its count.
BatchPrototypes batch_prototypes(std::span<const RealArray> features,
                                 std::span<const LabelMap> pseudo, std::size_t num_classes);

/// Builds the bank from the source model: features and argmax labels of the
/// same parameters over every target image, accumulated in one pass.
PrototypeBank init_prototypes(const ModelSpec& spec, const ParamVector& source_params,
                              std::span<const RealArray> target_images, double alpha);

/// EMA refresh. Classes with count 0 are untouched; a previously invalid class
/// with count > 0 takes the batch prototype directly and becomes valid.
PrototypeBank ema_refresh(PrototypeBank bank, const BatchPrototypes& batch);

/// cos(f, z_c); 0 when either vector has zero norm, -1 for invalid classes.
WeightMap cosine_weights(const RealArray& features, const PrototypeBank& bank);

/// Per-pixel argmax of the weights over valid classes (ties -> lowest index).
/// Throws ValueError when no class is valid.
LabelMap prototype_labels(const WeightMap& weights);

// Bank container ("PSFDAPB1"): magic C D alpha(f64) valid[C](u64 0/1) rows[C*D](f64).
void write_bank(std::ostream& os, const PrototypeBank& bank);
PrototypeBank read_bank(std::istream& is);

}  // namespace prosfda
