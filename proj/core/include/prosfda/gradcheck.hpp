// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace prosfda {

/// Outcome of one finite-difference comparison.
struct GradcheckCase {
  std::string loss;        ///< "supervised_ce", "weighted_st_ce" or "prototype_contrast"
  std::string wrt;         ///< "params" (through the model) or "inputs" (logits/features)
  std::uint64_t instance = 0;
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double worst() const;
};

/// Relative error between an analytic and a numeric gradient:
/// max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|, 1e-300).
double gradient_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

/// For `instances` random problems (H = W = 3, D = 4, C = 3) derived from
/// `seed`, compares the analytic gradients of every loss against central
/// differences with the given step, both w.r.t. the loss inputs and
/// end-to-end w.r.t. the model parameters.
GradcheckReport run_gradcheck(std::uint64_t seed, std::size_t instances = 20, double step = 1e-6);

}  // namespace prosfda
