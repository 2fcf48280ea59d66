// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/teacher.hpp"

#include <cmath>

namespace prosfda {
namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValueError("teacher: alpha must lie in [0, 1]");
}

}  // namespace

TeacherState init_teacher(const ParamVector& student_params, double alpha) {
  check_alpha(alpha);
  return TeacherState{student_params, alpha};
}

PseudoLabels pseudo_labels_from_logits(const RealArray& logits) {
  if (logits.rank() != 3) throw ShapeError("pseudo_labels: logits must be H x W x C");
  PseudoLabels out;
  out.labels = LabelMap(logits.dim(0), logits.dim(1));
  out.labels.labels = argmax_lastaxis(logits);
  out.probs = softmax(logits, 1.0);
  return out;
}

PseudoLabels pseudo_labels(const ModelSpec& spec, const TeacherState& teacher,
                           const RealArray& image) {
  return pseudo_labels_from_logits(forward(spec, teacher.params, image).logits);
}

TeacherState ema_update(TeacherState teacher, const ParamVector& student_params) {
  check_alpha(teacher.alpha);
  if (teacher.params.size() != student_params.size()) {
    throw ShapeError("ema_update: teacher and student parameter counts differ");
  }
  const double a = teacher.alpha;
  const double b = 1.0 - a;
  for (std::size_t i = 0; i < teacher.params.size(); ++i) {
    teacher.params[i] = a * teacher.params[i] + b * student_params[i];
  }
  return teacher;
}

}  // namespace prosfda
