// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "prosfda/error.hpp"

namespace prosfda {

using Shape = std::vector<std::size_t>;

/// Dense row-major array of doubles. Most maps in this library are rank 3
/// (H x W x K) and are processed one last-axis "row" (one pixel) at a time.
class RealArray {
 public:
  RealArray() = default;
  explicit RealArray(Shape shape, double fill = 0.0);
  RealArray(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t last_dim() const;
  /// Number of last-axis rows, i.e. size() / last_dim().
  std::size_t rows() const;

  std::span<double> row(std::size_t i);
  std::span<const double> row(std::size_t i) const;

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool all_finite() const noexcept;

  bool operator==(const RealArray&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t shape_product(const Shape& shape) noexcept;

/// Hard per-pixel class map of size height x width. Also used for
/// pseudo-labels and prototype labels.
struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::int32_t> labels;

  LabelMap() = default;
  LabelMap(std::size_t h, std::size_t w, std::int32_t fill = 0)
      : height(h), width(w), labels(h * w, fill) {}

  std::size_t size() const noexcept { return labels.size(); }
  std::int32_t operator[](std::size_t i) const noexcept { return labels[i]; }
  std::int32_t& operator[](std::size_t i) noexcept { return labels[i]; }

  bool operator==(const LabelMap&) const = default;
};

/// Softmax along the last axis with max subtraction. Throws ValueError for a
/// non-positive temperature or non-finite input.
RealArray softmax(const RealArray& logits, double temperature = 1.0);

/// Row kernel behind softmax(); `out` may alias nothing in `in`.
void softmax_row(std::span<const double> in, double temperature, std::span<double> out);

/// -log softmax(in)[target] computed as logsumexp(in) - in[target].
double nll_row(std::span<const double> in, std::size_t target);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row);

/// argmax over every last-axis row.
std::vector<std::int32_t> argmax_lastaxis(const RealArray& a);

struct Top2 {
  std::vector<double> first;
  std::vector<double> second;
};

/// Largest and second-largest entry of every last-axis row (length >= 2).
Top2 top2_lastaxis(const RealArray& a);

/// Counter-based generator: output i is the SplitMix64 finalizer applied to
/// key + (i + 1) * 0x9E3779B97F4A7C15, where key mixes (seed, stream). The
/// stream is therefore addressable at any position and identical on every
/// platform for the integer draws. Floating-point draws are derived with
/// fixed formulas (53-bit uniforms, Box-Muller normals).
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept;
  /// Standard normal; consumes two uniforms.
  double normal() noexcept;
  /// Uniform integer in [0, n), rejection sampled. n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }
  void set_counter(std::uint64_t c) noexcept { counter_ = c; }

  bool operator==(const Rng&) const = default;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace prosfda
