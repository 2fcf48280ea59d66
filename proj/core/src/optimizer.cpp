// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/optimizer.hpp"

#include <cmath>

#include "prosfda/binary_io.hpp"

namespace prosfda {

void AdamWConfig::validate() const {
  if (!(lr >= 0.0)) throw ValueError("AdamW: lr must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValueError("AdamW: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValueError("AdamW: beta2 must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ValueError("AdamW: weight_decay must be >= 0");
  if (!(epsilon > 0.0)) throw ValueError("AdamW: epsilon must be positive");
}

OptimizerState make_optimizer(std::size_t num_params, const AdamWConfig& config) {
  config.validate();
  return OptimizerState{config, std::vector<double>(num_params, 0.0),
                        std::vector<double>(num_params, 0.0), 0};
}

void apply_step(OptimizerState& state, ParamVector& params, const ParamVector& grad) {
  const std::size_t n = params.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n) {
    throw ShapeError("apply_step: params, grad and optimizer state lengths differ");
  }
  const AdamWConfig& c = state.config;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= c.lr * (m_hat / (std::sqrt(v_hat) + c.epsilon) + c.weight_decay * params[i]);
  }
}

namespace {
constexpr std::string_view kOptMagic = "PSFDAOP1";
}

void write_optimizer(std::ostream& os, const OptimizerState& s) {
  io::write_magic(os, kOptMagic);
  io::write_f64(os, s.config.lr);
  io::write_f64(os, s.config.beta1);
  io::write_f64(os, s.config.beta2);
  io::write_f64(os, s.config.weight_decay);
  io::write_f64(os, s.config.epsilon);
  io::write_u64(os, s.step_count);
  io::write_u64(os, s.m.size());
  io::write_f64s(os, s.m);
  io::write_f64s(os, s.v);
}

OptimizerState read_optimizer(std::istream& is) {
  io::expect_magic(is, kOptMagic, "optimizer state");
  OptimizerState s;
  s.config.lr = io::read_f64(is, "optimizer lr");
  s.config.beta1 = io::read_f64(is, "optimizer beta1");
  s.config.beta2 = io::read_f64(is, "optimizer beta2");
  s.config.weight_decay = io::read_f64(is, "optimizer weight_decay");
  s.config.epsilon = io::read_f64(is, "optimizer epsilon");
  try {
    s.config.validate();
  } catch (const ValueError& e) {
    throw DataError(std::string("optimizer state: ") + e.what());
  }
  s.step_count = io::read_u64(is, "optimizer step_count");
  const auto n = io::read_count(is, std::uint64_t{1} << 32, "optimizer moment length");
  s.m.resize(n);
  s.v.resize(n);
  io::read_f64s(is, s.m, "optimizer first moment");
  io::read_f64s(is, s.v, "optimizer second moment");
  return s;
}

}  // namespace prosfda
