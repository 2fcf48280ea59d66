// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "prosfda/segmenter.hpp"

namespace prosfda {

/// Adam with decoupled weight decay. Defaults are the adaptation settings:
/// betas (0.9, 0.999), weight decay 0.01, learning rate 6e-5.
struct AdamWConfig {
  double lr = 6e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double epsilon = 1e-8;

  void validate() const;
  bool operator==(const AdamWConfig&) const = default;
};

struct OptimizerState {
  AdamWConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step_count = 0;

  bool operator==(const OptimizerState&) const = default;
};

OptimizerState make_optimizer(std::size_t num_params, const AdamWConfig& config);

/// One bias-corrected AdamW step:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
void apply_step(OptimizerState& state, ParamVector& params, const ParamVector& grad);

// Container ("PSFDAOP1"): magic lr b1 b2 wd eps (f64) step_count n m[n] v[n].
void write_optimizer(std::ostream& os, const OptimizerState& state);
OptimizerState read_optimizer(std::istream& is);

}  // namespace prosfda
