// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/run_config.hpp"

#include <fstream>
#include <sstream>

#include "kv_text.hpp"

namespace prosfda {
namespace {

const std::set<std::string> kKeys = {
    "input_dim",     "hidden_dims",    "num_classes",    "init_scale",      "pretrain_lr",
    "lr",            "beta1",          "beta2",          "weight_decay",    "epsilon",
    "alpha_teacher", "alpha_proto",    "tau",            "tau_c",           "lambda_pce",
    "clamp_weights", "identity_bank",  "batch_size",     "pretrain_steps",  "adapt_steps",
    "seed",          "source_data",    "target_data",    "source_checkpoint", "adapted_checkpoint",
    "run_log",       "source_report",  "resume_from"};

void require(bool ok, const char* msg) {
  if (!ok) throw ConfigError(std::string("run config: ") + msg);
}

}  // namespace

ModelSpec RunConfig::model_spec() const { return ModelSpec{input_dim, hidden_dims, num_classes}; }

AdamWConfig RunConfig::pretrain_optimizer() const {
  return AdamWConfig{pretrain_lr, beta1, beta2, weight_decay, epsilon};
}

AdamWConfig RunConfig::adapt_optimizer() const {
  return AdamWConfig{lr, beta1, beta2, weight_decay, epsilon};
}

void RunConfig::validate() const {
  try {
    model_spec().validate();
    pretrain_optimizer().validate();
    adapt_optimizer().validate();
  } catch (const ValueError& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  require(num_classes >= 2, "num_classes must be >= 2");
  require(init_scale > 0.0, "init_scale must be positive");
  require(alpha_teacher >= 0.0 && alpha_teacher <= 1.0, "alpha_teacher must lie in [0, 1]");
  require(alpha_proto >= 0.0 && alpha_proto <= 1.0, "alpha_proto must lie in [0, 1]");
  require(tau > 0.0, "tau must be positive");
  require(tau_c > 0.0, "tau_c must be positive");
  require(lambda_pce >= 0.0, "lambda_pce must be >= 0");
  require(batch_size > 0, "batch_size must be positive");
}

RunConfig parse_run_config(std::string_view text) {
  const auto kvs = kv::parse(text, kKeys, "run config");
  RunConfig c;
  for (const auto& [k, v] : kvs) {
    if (k == "input_dim") c.input_dim = kv::to_u64(k, v);
    else if (k == "hidden_dims") c.hidden_dims = kv::to_size_list(k, v);
    else if (k == "num_classes") c.num_classes = kv::to_u64(k, v);
    else if (k == "init_scale") c.init_scale = kv::to_double(k, v);
    else if (k == "pretrain_lr") c.pretrain_lr = kv::to_double(k, v);
    else if (k == "lr") c.lr = kv::to_double(k, v);
    else if (k == "beta1") c.beta1 = kv::to_double(k, v);
    else if (k == "beta2") c.beta2 = kv::to_double(k, v);
    else if (k == "weight_decay") c.weight_decay = kv::to_double(k, v);
    else if (k == "epsilon") c.epsilon = kv::to_double(k, v);
    else if (k == "alpha_teacher") c.alpha_teacher = kv::to_double(k, v);
    else if (k == "alpha_proto") c.alpha_proto = kv::to_double(k, v);
    else if (k == "tau") c.tau = kv::to_double(k, v);
    else if (k == "tau_c") c.tau_c = kv::to_double(k, v);
    else if (k == "lambda_pce") c.lambda_pce = kv::to_double(k, v);
    else if (k == "clamp_weights") c.clamp_weights = kv::to_bool(k, v);
    else if (k == "identity_bank") c.identity_bank = kv::to_bool(k, v);
    else if (k == "batch_size") c.batch_size = kv::to_u64(k, v);
    else if (k == "pretrain_steps") c.pretrain_steps = kv::to_u64(k, v);
    else if (k == "adapt_steps") c.adapt_steps = kv::to_u64(k, v);
    else if (k == "seed") c.seed = kv::to_u64(k, v);
    else if (k == "source_data") c.source_data = v;
    else if (k == "target_data") c.target_data = v;
    else if (k == "source_checkpoint") c.source_checkpoint = v;
    else if (k == "adapted_checkpoint") c.adapted_checkpoint = v;
    else if (k == "run_log") c.run_log = v;
    else if (k == "source_report") c.source_report = v;
    else if (k == "resume_from") c.resume_from = v;
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open run config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_text(const RunConfig& c) {
  std::ostringstream os;
  auto line = [&](std::string_view k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  line("input_dim", std::to_string(c.input_dim));
  line("hidden_dims", kv::format(c.hidden_dims));
  line("num_classes", std::to_string(c.num_classes));
  line("init_scale", kv::format(c.init_scale));
  line("pretrain_lr", kv::format(c.pretrain_lr));
  line("lr", kv::format(c.lr));
  line("beta1", kv::format(c.beta1));
  line("beta2", kv::format(c.beta2));
  line("weight_decay", kv::format(c.weight_decay));
  line("epsilon", kv::format(c.epsilon));
  line("alpha_teacher", kv::format(c.alpha_teacher));
  line("alpha_proto", kv::format(c.alpha_proto));
  line("tau", kv::format(c.tau));
  line("tau_c", kv::format(c.tau_c));
  line("lambda_pce", kv::format(c.lambda_pce));
  line("clamp_weights", b(c.clamp_weights));
  line("identity_bank", b(c.identity_bank));
  line("batch_size", std::to_string(c.batch_size));
  line("pretrain_steps", std::to_string(c.pretrain_steps));
  line("adapt_steps", std::to_string(c.adapt_steps));
  line("seed", std::to_string(c.seed));
  line("source_data", c.source_data);
  line("target_data", c.target_data);
  line("source_checkpoint", c.source_checkpoint);
  line("adapted_checkpoint", c.adapted_checkpoint);
  line("run_log", c.run_log);
  line("source_report", c.source_report);
  line("resume_from", c.resume_from);
  return os.str();
}

void save_run_config(const std::string& path, const RunConfig& config) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << to_text(config);
}

}  // namespace prosfda
