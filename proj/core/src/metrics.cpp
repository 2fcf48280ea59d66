// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace prosfda {
namespace {

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : n_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw ValueError("ConfusionMatrix: need at least one class");
}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& truth) {
  if (pred.height != truth.height || pred.width != truth.width || pred.size() != truth.size()) {
    throw ShapeError("ConfusionMatrix::accumulate: prediction and truth shapes differ");
  }
  const auto n = static_cast<std::int32_t>(n_);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= n || truth[i] < 0 || truth[i] >= n) {
      throw ValueError("ConfusionMatrix::accumulate: label out of range");
    }
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++at(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(pred[i]));
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw ShapeError("ConfusionMatrix::merge: class counts differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

IouReport iou_report(const ConfusionMatrix& cm) {
  const std::size_t n = cm.num_classes();
  IouReport r;
  r.per_class.resize(n);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::uint64_t tp = cm.at(c, c);
    std::uint64_t fp = 0, fn = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == c) continue;
      fp += cm.at(k, c);
      fn += cm.at(c, k);
    }
    const std::uint64_t uni = tp + fp + fn;
    if (uni == 0) continue;
    const double iou = 100.0 * static_cast<double>(tp) / static_cast<double>(uni);
    r.per_class[c] = iou;
    sum += iou;
    ++present;
  }
  r.overall = present ? sum / static_cast<double>(present) : 0.0;
  return r;
}

std::vector<std::string> default_class_names(std::size_t num_classes) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < num_classes; ++c) names.push_back("class" + std::to_string(c));
  return names;
}

std::string format_iou_table(const IouReport& report, std::span<const std::string> class_names,
                             std::string_view method) {
  if (class_names.size() != report.per_class.size()) {
    throw ShapeError("format_iou_table: one name per class required");
  }
  std::vector<std::string> head{"Method"};
  std::vector<std::string> row{std::string(method)};
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    head.push_back(class_names[c]);
    row.push_back(report.per_class[c] ? two_decimals(*report.per_class[c]) : "absent");
  }
  head.push_back("Overall");
  row.push_back(two_decimals(report.overall));

  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::size_t wdt = std::max(head[i].size(), row[i].size());
      if (i == 0) {
        os << cells[i] << std::string(wdt - cells[i].size(), ' ');
      } else {
        os << " | " << std::string(wdt - cells[i].size(), ' ') << cells[i];
      }
    }
    os << '\n';
  };
  emit(head);
  emit(row);
  return os.str();
}

std::string format_iou_csv(const IouReport& report, std::span<const std::string> class_names) {
  if (class_names.size() != report.per_class.size()) {
    throw ShapeError("format_iou_csv: one name per class required");
  }
  std::ostringstream os;
  os << "class,iou_percent\n";
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    os << class_names[c] << ','
       << (report.per_class[c] ? two_decimals(*report.per_class[c]) : "absent") << '\n';
  }
  os << "overall," << two_decimals(report.overall) << '\n';
  return os.str();
}

}  // namespace prosfda
