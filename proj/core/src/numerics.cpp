// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace prosfda {

std::size_t shape_product(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

RealArray::RealArray(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

RealArray::RealArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("RealArray: shape holds " + std::to_string(shape_product(shape_)) +
                     " values but data has " + std::to_string(data_.size()));
  }
}

std::size_t RealArray::dim(std::size_t axis) const {
  if (axis >= shape_.size()) throw ShapeError("RealArray::dim: axis out of range");
  return shape_[axis];
}

std::size_t RealArray::last_dim() const {
  if (shape_.empty()) throw ShapeError("RealArray: rank-0 array has no last axis");
  return shape_.back();
}

std::size_t RealArray::rows() const {
  const std::size_t k = last_dim();
  return k == 0 ? 0 : data_.size() / k;
}

std::span<double> RealArray::row(std::size_t i) {
  const std::size_t k = last_dim();
  return std::span<double>(data_).subspan(i * k, k);
}

std::span<const double> RealArray::row(std::size_t i) const {
  const std::size_t k = last_dim();
  return std::span<const double>(data_).subspan(i * k, k);
}

bool RealArray::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void softmax_row(std::span<const double> in, double temperature, std::span<double> out) {
  const double inv_t = 1.0 / temperature;
  double m = in[0] * inv_t;
  for (double x : in) m = std::max(m, x * inv_t);
  double sum = 0.0;
  for (std::size_t c = 0; c < in.size(); ++c) {
    out[c] = std::exp(in[c] * inv_t - m);
    sum += out[c];
  }
  for (double& o : out) o /= sum;
}

double nll_row(std::span<const double> in, std::size_t target) {
  double m = in[0];
  for (double x : in) m = std::max(m, x);
  double sum = 0.0;
  for (double x : in) sum += std::exp(x - m);
  return std::log(sum) + m - in[target];
}

RealArray softmax(const RealArray& logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ValueError("softmax: temperature must be positive and finite");
  }
  if (logits.last_dim() == 0) throw ShapeError("softmax: empty last axis");
  if (!logits.all_finite()) throw ValueError("softmax: non-finite input");
  RealArray out(logits.shape());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    softmax_row(logits.row(r), temperature, out.row(r));
  }
  return out;
}

std::size_t argmax(std::span<const double> row) {
  if (row.empty()) throw ShapeError("argmax: empty axis");
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

std::vector<std::int32_t> argmax_lastaxis(const RealArray& a) {
  if (a.last_dim() == 0) throw ShapeError("argmax_lastaxis: empty last axis");
  std::vector<std::int32_t> out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    out[r] = static_cast<std::int32_t>(argmax(a.row(r)));
  }
  return out;
}

Top2 top2_lastaxis(const RealArray& a) {
  if (a.last_dim() < 2) throw ShapeError("top2_lastaxis: last axis needs at least 2 entries");
  Top2 out;
  out.first.resize(a.rows());
  out.second.resize(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    double v1 = std::max(row[0], row[1]);
    double v2 = std::min(row[0], row[1]);
    for (std::size_t c = 2; c < row.size(); ++c) {
      if (row[c] > v1) {
        v2 = v1;
        v1 = row[c];
      } else if (row[c] > v2) {
        v2 = row[c];
      }
    }
    out.first[r] = v1;
    out.second[r] = v2;
  }
  return out;
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) noexcept
    : seed_(seed), stream_(stream), key_(mix64(seed ^ mix64(stream + kGolden))) {}

std::uint64_t Rng::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

double Rng::normal() noexcept {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

}  // namespace prosfda
