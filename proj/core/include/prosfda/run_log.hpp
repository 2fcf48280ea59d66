// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace prosfda {

/// Per-step adaptation statistics. Case fractions are over all pixels of the
/// batch and sum to 1.
struct StepRecord {
  std::uint64_t step = 0;
  double l_ce = 0.0;
  double l_pce = 0.0;
  double frac_agree = 0.0;
  double frac_teacher = 0.0;
  double frac_proto = 0.0;
  double frac_tie = 0.0;
  double mean_weight = 0.0;  ///< mean self-training weight actually applied

  bool operator==(const StepRecord&) const = default;
};

struct RunLog {
  std::vector<StepRecord> steps;

  bool operator==(const RunLog&) const = default;
};

/// JSON file: {"format": "prosfda-runlog", "version": 1, "steps": [{...}]}.
void save_run_log(const std::string& path, const RunLog& log);
RunLog load_run_log(const std::string& path);

/// Curves as CSV: step,l_ce,l_pce,frac_agree,frac_teacher,frac_proto,frac_tie,mean_weight
std::string run_log_csv(const RunLog& log);

}  // namespace prosfda
