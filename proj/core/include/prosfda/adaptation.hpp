// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prosfda/losses.hpp"
#include "prosfda/metrics.hpp"
#include "prosfda/optimizer.hpp"
#include "prosfda/prototype_bank.hpp"
#include "prosfda/run_config.hpp"
#include "prosfda/run_log.hpp"
#include "prosfda/segmenter.hpp"
#include "prosfda/synth_data.hpp"
#include "prosfda/teacher.hpp"

namespace prosfda {

/// RNG streams of the run seed.
inline constexpr std::uint64_t kInitStream = 0;
inline constexpr std::uint64_t kPretrainStream = 1;
inline constexpr std::uint64_t kAdaptStream = 2;

/// Distinct image indices for one step: a partial Fisher-Yates shuffle of
/// [0, n) driven by Rng(seed, (stream << 40) | step). Depends only on its
/// arguments, so resumed runs see the same batches.
std::vector<std::size_t> sample_batch(std::uint64_t seed, std::uint64_t stream,
                                      std::uint64_t step, std::size_t n, std::size_t batch_size);

// ---- Stage 1: supervised source training ----

struct PretrainResult {
  Model model;
  IouReport source_report;  ///< IoU of the final model on the training set
};

/// Initializes from Rng(seed, kInitStream) and runs pretrain_steps of
/// supervised CE with AdamW on batches of whole source images.
PretrainResult train_source(const RunConfig& config, const Dataset& source);

/// File-level stage 1: loads config.source_data, trains, writes
/// config.source_checkpoint (and config.source_report when set).
PretrainResult pretrain_source(const RunConfig& config);

// ---- Stage 2: source-free adaptation ----

/// Everything needed to resume adaptation bit-exactly. Batch sampling is a
/// pure function of (seed, step), so (seed, step) is the RNG state.
struct AdaptState {
  ModelSpec spec;
  ParamVector student;
  TeacherState teacher;
  PrototypeBank bank;
  OptimizerState optimizer;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;

  bool operator==(const AdaptState&) const = default;
};

// State container ("PSFDAST1"): magic seed step, then model (student),
// teacher alpha + params (f64, count = student count), bank, optimizer.
void write_adapt_state(std::ostream& os, const AdaptState& state);
AdaptState read_adapt_state(std::istream& is);
void save_adapt_state(const std::string& path, const AdaptState& state);
AdaptState load_adapt_state(const std::string& path);
std::string adapt_state_path(const std::string& adapted_checkpoint);

/// Student and teacher copy the source model; prototypes come from one pass
/// of the source model over every target image.
AdaptState begin_adaptation(const RunConfig& config, const Model& source,
                            std::span<const RealArray> target_images);

/// One step on the given batch: teacher pseudo-labels, student forward,
/// cosine weights, prototype labels, confidences, weighted self-training CE
/// plus lambda * prototype contrast, AdamW step, teacher EMA, prototype EMA
/// (student features under teacher labels).
StepRecord adapt_step(const RunConfig& config, AdaptState& state,
                      std::span<const RealArray> target_images,
                      std::span<const std::size_t> batch);

/// Runs steps until state.step == config.adapt_steps, appending to `log`.
void continue_adaptation(const RunConfig& config, AdaptState& state,
                         std::span<const RealArray> target_images, RunLog& log);

struct AdaptResult {
  AdaptState state;
  RunLog log;
};

/// In-memory stage 2. Takes only target pixels; labels cannot reach it.
AdaptResult adapt(const RunConfig& config, const Model& source,
                  std::span<const RealArray> target_images);

/// File-level stage 2: loads config.source_checkpoint and the pixel payload of
/// config.target_data (optionally resuming from config.resume_from), runs,
/// then writes config.adapted_checkpoint, its .state file and config.run_log.
AdaptResult run_adaptation(const RunConfig& config);

// ---- Evaluation: the only consumer of ground-truth labels ----

LabelMap predict(const Model& model, const RealArray& image);
ConfusionMatrix confusion(const Model& model, const Dataset& dataset);
IouReport evaluate(const Model& model, const Dataset& dataset);

}  // namespace prosfda
