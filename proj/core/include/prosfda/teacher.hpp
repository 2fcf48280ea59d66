// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "prosfda/numerics.hpp"
#include "prosfda/segmenter.hpp"

namespace prosfda {

/// Slow EMA copy of the student that produces online pseudo-labels.
struct TeacherState {
  ParamVector params;
  double alpha = 0.99;

  bool operator==(const TeacherState&) const = default;
};

/// Teacher starts as an exact copy of the student. alpha must lie in [0, 1].
TeacherState init_teacher(const ParamVector& student_params, double alpha);

struct PseudoLabels {
  LabelMap labels;  ///< per-pixel argmax of teacher logits, ties -> lowest class
  RealArray probs;  ///< softmax(teacher logits), H x W x C
};

PseudoLabels pseudo_labels(const ModelSpec& spec, const TeacherState& teacher,
                           const RealArray& image);

/// Same as pseudo_labels() starting from already computed H x W x C logits.
PseudoLabels pseudo_labels_from_logits(const RealArray& logits);

/// params <- alpha * params + (1 - alpha) * student, element-wise.
TeacherState ema_update(TeacherState teacher, const ParamVector& student_params);

}  // namespace prosfda
