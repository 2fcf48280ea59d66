// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "prosfda/numerics.hpp"
#include "prosfda/prototype_bank.hpp"

namespace prosfda {

/// Loss value with gradients w.r.t. the logits (H x W x C) and features
/// (H x W x D). An empty gradient array means the loss does not depend on
/// that input; segmenter::backward treats it as zero.
struct LossOutput {
  double value = 0.0;
  RealArray grad_logits;
  RealArray grad_features;
};

/// Mean pixel cross-entropy of softmax(logits) against hard labels.
LossOutput supervised_ce(const RealArray& logits, const LabelMap& labels);

/// Self-training CE where each pixel's term is scaled by the cosine weight of
/// its pseudo-label class. With `clamp_negative` the weight is max(w, 0).
/// Weights are constants: only grad_logits is produced.
LossOutput weighted_st_ce(const RealArray& logits, const LabelMap& pseudo,
                          const WeightMap& weights, bool clamp_negative = true);

/// Decisiveness of two per-pixel predictions, each the ratio of the largest
/// to the second-largest probability (always >= 1).
struct ConfidenceMaps {
  std::vector<double> teacher;  ///< from the teacher's class probabilities
  std::vector<double> proto;    ///< from softmax(weights / tau_c)
};

ConfidenceMaps confidence_maps(const RealArray& teacher_probs, const WeightMap& weights,
                               double tau_c);

/// Which label a pixel's contrast term targets.
enum class ContrastCase : std::uint8_t {
  agree,         ///< teacher label == prototype label
  teacher_wins,  ///< disagree, teacher more confident
  proto_wins,    ///< disagree, prototype more confident
  tie,           ///< disagree, equal confidence; resolved to the prototype label
};

std::vector<ContrastCase> contrast_cases(const LabelMap& pseudo, const LabelMap& proto_labels,
                                         const ConfidenceMaps& conf);

/// Target class for one pixel given its case.
std::int32_t contrast_target(ContrastCase c, std::int32_t pseudo, std::int32_t proto);

/// Prototype-contrast CE: per pixel -log softmax(weights / tau)[target], mean
/// over pixels, with target chosen by contrast_cases(). Gradient flows into
/// the features through the cosine similarities; the bank, both label maps
/// and the confidences are constants. `weights` must equal
/// cosine_weights(features, bank).
LossOutput prototype_contrast_loss(const RealArray& features, const WeightMap& weights,
                                   const LabelMap& pseudo, const LabelMap& proto_labels,
                                   const ConfidenceMaps& conf, const PrototypeBank& bank,
                                   double tau);

/// ce + lambda * pce, for both the value and the gradients.
LossOutput total_adaptation_loss(const LossOutput& ce, const LossOutput& pce, double lambda_pce);

}  // namespace prosfda
