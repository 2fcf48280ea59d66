// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prosfda/numerics.hpp"

namespace prosfda {

/// C x C pixel counts, rows = ground truth, columns = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  /// Adds one count per pixel. Throws ShapeError / ValueError for mismatched
  /// maps or labels outside [0, C).
  void accumulate(const LabelMap& pred, const LabelMap& truth);
  void merge(const ConfusionMatrix& other);

  std::size_t num_classes() const noexcept { return n_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * n_ + pred]; }
  std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * n_ + pred]; }
  std::uint64_t total() const noexcept;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

struct IouReport {
  /// IoU in percent; nullopt for classes with an empty union (absent).
  std::vector<std::optional<double>> per_class;
  /// Mean over present classes, in percent; 0 when no class is present.
  double overall = 0.0;

  bool operator==(const IouReport&) const = default;
};

IouReport iou_report(const ConfusionMatrix& cm);

/// Default class names "class0", "class1", ...
std::vector<std::string> default_class_names(std::size_t num_classes);

/// Aligned text table laid out like a results row: a header with one column
/// per class plus "Overall", then one row labelled `method`. Two decimals.
std::string format_iou_table(const IouReport& report, std::span<const std::string> class_names,
                             std::string_view method);

/// CSV with a `class,iou_percent` header, one row per class (absent classes
/// read "absent") and a final `overall` row.
std::string format_iou_csv(const IouReport& report, std::span<const std::string> class_names);

}  // namespace prosfda
