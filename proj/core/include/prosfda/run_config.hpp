// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "prosfda/optimizer.hpp"
#include "prosfda/segmenter.hpp"

namespace prosfda {

/// Every knob of a pretrain + adapt run. Serialized as flat `key = value`
/// text with the field names below as keys; unknown keys are rejected.
struct RunConfig {
  // model
  std::size_t input_dim = 8;
  std::vector<std::size_t> hidden_dims{32, 16};
  std::size_t num_classes = 5;
  double init_scale = 1.0;

  // optimizer (betas, decay and epsilon are shared by both stages)
  double pretrain_lr = 1e-2;
  double lr = 6e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double epsilon = 1e-8;

  // adaptation
  double alpha_teacher = 0.99;
  double alpha_proto = 0.99;
  double tau = 0.1;    ///< prototype-contrast temperature
  double tau_c = 0.1;  ///< temperature of the prototype confidence distribution
  double lambda_pce = 1.0;
  bool clamp_weights = true;
  bool identity_bank = false;  ///< debug: self-training weights forced to 1

  std::size_t batch_size = 4;
  std::uint64_t pretrain_steps = 400;
  std::uint64_t adapt_steps = 600;
  std::uint64_t seed = 7;

  // paths
  std::string source_data;
  std::string target_data;
  std::string source_checkpoint;
  std::string adapted_checkpoint;
  std::string run_log;
  std::string source_report;  ///< optional CSV of the final source-domain IoU
  std::string resume_from;    ///< optional adaptation state to continue from

  ModelSpec model_spec() const;
  AdamWConfig pretrain_optimizer() const;
  AdamWConfig adapt_optimizer() const;
  /// Throws ConfigError on out-of-range values.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);
std::string to_text(const RunConfig& config);
void save_run_config(const std::string& path, const RunConfig& config);

}  // namespace prosfda
