// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: dataset generation, source pretraining, source-free
// adaptation, evaluation, gradient checking and run-log export.
//
// Exit codes: 0 success, 1 usage or config error, 2 data/checkpoint error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "prosfda/adaptation.hpp"
#include "prosfda/gradcheck.hpp"
#include "prosfda/metrics.hpp"
#include "prosfda/run_config.hpp"
#include "prosfda/run_log.hpp"
#include "prosfda/synth_data.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

int cmd_gen_data(const std::string& spec_file, const std::string& prefix) {
  const prosfda::DomainRecipe recipe = prosfda::load_domain_recipe(spec_file);
  const auto src = prosfda::source_dataset_path(prefix);
  const auto tgt = prosfda::target_dataset_path(prefix);
  const auto dir = std::filesystem::path(src).parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  prosfda::save_dataset(src, prosfda::generate_source(recipe));
  prosfda::save_dataset(tgt, prosfda::generate_target(recipe));
  std::cout << "wrote " << src << "\nwrote " << tgt << '\n';
  return 0;
}

int cmd_pretrain(const std::string& config_file) {
  const prosfda::RunConfig cfg = prosfda::load_run_config(config_file);
  const prosfda::PretrainResult r = prosfda::pretrain_source(cfg);
  std::cout << "wrote " << cfg.source_checkpoint << " after " << cfg.pretrain_steps << " steps\n"
            << "source-domain IoU (training set):\n"
            << prosfda::format_iou_table(r.source_report,
                                         prosfda::default_class_names(cfg.num_classes),
                                         "Source-only");
  return 0;
}

int cmd_adapt(const std::string& config_file) {
  const prosfda::RunConfig cfg = prosfda::load_run_config(config_file);
  const prosfda::AdaptResult r = prosfda::run_adaptation(cfg);
  std::cout << "wrote " << cfg.adapted_checkpoint << " (step " << r.state.step << ")\n";
  if (!cfg.run_log.empty()) std::cout << "wrote " << cfg.run_log << '\n';
  if (!r.log.steps.empty()) {
    const auto& last = r.log.steps.back();
    std::printf("final step %llu: L_ce %.6f  L_pce %.6f  agree %.3f  mean weight %.3f\n",
                static_cast<unsigned long long>(last.step), last.l_ce, last.l_pce,
                last.frac_agree, last.mean_weight);
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& dataset, bool csv,
             const std::string& method) {
  const prosfda::Model model = prosfda::load_model(checkpoint);
  const prosfda::Dataset data = prosfda::load_dataset(dataset);
  const prosfda::IouReport report = prosfda::evaluate(model, data);
  const auto names = prosfda::default_class_names(model.spec.num_classes);
  std::cout << (csv ? prosfda::format_iou_csv(report, names)
                    : prosfda::format_iou_table(report, names, method));
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t instances) {
  const prosfda::GradcheckReport report = prosfda::run_gradcheck(seed, instances);
  constexpr double kTolerance = 1e-5;
  for (const std::string loss : {"supervised_ce", "weighted_st_ce", "prototype_contrast"}) {
    for (const std::string wrt : {"inputs", "params"}) {
      double worst = 0.0;
      std::size_t n = 0;
      for (const auto& c : report.cases) {
        if (c.loss == loss && c.wrt == wrt) {
          worst = std::max(worst, c.max_rel_error);
          ++n;
        }
      }
      std::printf("%-20s wrt %-6s  instances %zu  max rel err %.3e  %s\n", loss.c_str(),
                  wrt.c_str(), n, worst, worst < kTolerance ? "PASS" : "FAIL");
    }
  }
  return report.worst() < kTolerance ? 0 : kDataError;
}

int cmd_report(const std::string& runlog, const std::string& out) {
  const std::string csv = prosfda::run_log_csv(prosfda::load_run_log(runlog));
  if (out.empty()) {
    std::cout << csv;
    return 0;
  }
  std::ofstream os(out);
  if (!os) throw prosfda::DataError("cannot open '" + out + "' for writing");
  os << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source-free domain adaptation with prototype-weighted self-training"};
  app.require_subcommand(1);

  std::string spec_file, prefix, config_file, checkpoint, dataset, runlog, out, method = "Model";
  bool csv = false;
  std::uint64_t seed = 0;
  std::size_t instances = 20;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic source/target dataset pair");
  gen->add_option("spec-file", spec_file, "Dataset spec (key = value)")->required();
  gen->add_option("out-prefix", prefix, "Writes <prefix>.src.bin and <prefix>.tgt.bin")->required();

  auto* pre = app.add_subcommand("pretrain", "Supervised training on the labelled source domain");
  pre->add_option("config", config_file, "Run config (key = value)")->required();

  auto* ada = app.add_subcommand("adapt", "Adapt a source checkpoint to the unlabelled target");
  ada->add_option("config", config_file, "Run config (key = value)")->required();

  auto* ev = app.add_subcommand("eval", "Per-class and overall IoU of a checkpoint on a dataset");
  ev->add_option("checkpoint", checkpoint, "Model checkpoint")->required();
  ev->add_option("dataset", dataset, "Dataset file")->required();
  ev->add_flag("--csv", csv, "Emit class,iou_percent CSV instead of a table");
  ev->add_option("--method", method, "Row label of the table");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every loss gradient");
  gc->add_option("--seed", seed, "Seed of the random instances");
  gc->add_option("--instances", instances, "Instances per loss")->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("report", "Export a run log as loss / case-fraction CSV");
  rep->add_option("runlog", runlog, "Run log written by adapt")->required();
  rep->add_option("-o,--output", out, "Write CSV to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen) return cmd_gen_data(spec_file, prefix);
    if (*pre) return cmd_pretrain(config_file);
    if (*ada) return cmd_adapt(config_file);
    if (*ev) return cmd_eval(checkpoint, dataset, csv, method);
    if (*gc) return cmd_gradcheck(seed, instances);
    if (*rep) return cmd_report(runlog, out);
  } catch (const prosfda::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const prosfda::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}
