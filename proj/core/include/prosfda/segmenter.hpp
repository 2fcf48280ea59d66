// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "prosfda/numerics.hpp"

namespace prosfda {

/// Architecture of the pixel-wise classifier: input_dim -> hidden_dims[0] ->
/// ... -> hidden_dims.back() (= feature_dim, D) -> num_classes (C). Every
/// hidden layer is affine + tanh; the head is a single affine map D -> C.
struct ModelSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t num_classes = 0;

  std::size_t feature_dim() const { return hidden_dims.empty() ? 0 : hidden_dims.back(); }
  std::size_t param_count() const;
  void validate() const;

  bool operator==(const ModelSpec&) const = default;
};

/// Offsets of one affine layer inside a ParamVector. Weights are stored
/// row-major as [in][out] so that y = x * W + b.
struct LayerSlot {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weights = 0;
  std::size_t biases = 0;
};

/// Layer slots in forward order (hidden layers, then head). The layout is a
/// pure function of the spec: for each layer, in*out weights then out biases.
std::vector<LayerSlot> param_layout(const ModelSpec& spec);

/// Flat parameter vector shared by student, teacher and optimizer state.
struct ParamVector {
  std::vector<double> values;

  ParamVector() = default;
  explicit ParamVector(std::size_t n, double fill = 0.0) : values(n, fill) {}
  explicit ParamVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) noexcept { return values[i]; }
  double operator[](std::size_t i) const noexcept { return values[i]; }

  bool operator==(const ParamVector&) const = default;
};

struct ForwardResult {
  RealArray features;  ///< H x W x D, post-tanh activations of the last hidden layer.
  RealArray logits;    ///< H x W x C.
};

/// Evaluate the model on an H x W x input_dim image.
ForwardResult forward(const ModelSpec& spec, const ParamVector& params, const RealArray& image);

/// Gradient of a scalar L w.r.t. params, given dL/dfeatures (H x W x D) and
/// dL/dlogits (H x W x C). An empty array stands for an all-zero upstream.
ParamVector backward(const ModelSpec& spec, const ParamVector& params, const RealArray& image,
                     const RealArray& upstream_feature_grad, const RealArray& upstream_logit_grad);

/// Weights ~ U(-scale, scale) / sqrt(fan_in); biases zero.
ParamVector init_params(const ModelSpec& spec, Rng& rng, double scale);

struct Model {
  ModelSpec spec;
  ParamVector params;

  bool operator==(const Model&) const = default;
};

// Model checkpoint ("PSFDAMD1"), all integers u64 LE, reals f64 LE:
//   magic[8] input_dim num_hidden hidden_dims[num_hidden] num_classes
//   param_count params[param_count]
void write_model(std::ostream& os, const Model& model);
Model read_model(std::istream& is);
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace prosfda
