// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/losses.hpp"

#include <algorithm>
#include <cmath>

namespace prosfda {
namespace {

void check_labels(const RealArray& logits, const LabelMap& labels, const char* who) {
  if (logits.rank() != 3 || logits.dim(0) != labels.height || logits.dim(1) != labels.width) {
    throw ShapeError(std::string(who) + ": logits and label map shapes disagree");
  }
  const auto nc = static_cast<std::int32_t>(logits.dim(2));
  for (std::int32_t l : labels.labels) {
    if (l < 0 || l >= nc) throw ValueError(std::string(who) + ": label out of range");
  }
}

// Adds d/df cos(f, z) * scale to grad, for nonzero f and z.
void add_cosine_grad(std::span<const double> f, double fnorm, std::span<const double> z,
                     double znorm, double cosine, double scale, std::span<double> grad) {
  const double inv_fz = 1.0 / (fnorm * znorm);
  const double inv_ff = cosine / (fnorm * fnorm);
  for (std::size_t k = 0; k < f.size(); ++k) {
    grad[k] += scale * (z[k] * inv_fz - f[k] * inv_ff);
  }
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

RealArray combine(const RealArray& a, const RealArray& b, double lambda) {
  if (b.empty()) return a;
  if (a.empty()) {
    RealArray out(b.shape());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = lambda * b[i];
    return out;
  }
  if (a.shape() != b.shape()) throw ShapeError("total_adaptation_loss: gradient shapes differ");
  RealArray out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + lambda * b[i];
  return out;
}

}  // namespace

LossOutput supervised_ce(const RealArray& logits, const LabelMap& labels) {
  check_labels(logits, labels, "supervised_ce");
  const std::size_t n = labels.size();
  const std::size_t nc = logits.dim(2);
  LossOutput out{0.0, RealArray(logits.shape()), {}};
  std::vector<double> p(nc);
  double sum = 0.0;
  for (std::size_t px = 0; px < n; ++px) {
    auto z = logits.row(px);
    const auto t = static_cast<std::size_t>(labels[px]);
    sum += nll_row(z, t);
    softmax_row(z, 1.0, p);
    auto g = out.grad_logits.row(px);
    for (std::size_t c = 0; c < nc; ++c) g[c] = (p[c] - (c == t ? 1.0 : 0.0)) / static_cast<double>(n);
  }
  out.value = sum / static_cast<double>(n);
  return out;
}

LossOutput weighted_st_ce(const RealArray& logits, const LabelMap& pseudo,
                          const WeightMap& weights, bool clamp_negative) {
  check_labels(logits, pseudo, "weighted_st_ce");
  if (weights.values.shape() != logits.shape()) {
    throw ShapeError("weighted_st_ce: weight map and logits shapes disagree");
  }
  const std::size_t n = pseudo.size();
  const std::size_t nc = logits.dim(2);
  LossOutput out{0.0, RealArray(logits.shape()), {}};
  std::vector<double> p(nc);
  double sum = 0.0;
  for (std::size_t px = 0; px < n; ++px) {
    auto z = logits.row(px);
    const auto t = static_cast<std::size_t>(pseudo[px]);
    double w = weights.values.row(px)[t];
    if (clamp_negative) w = std::max(w, 0.0);
    sum += w * nll_row(z, t);
    softmax_row(z, 1.0, p);
    auto g = out.grad_logits.row(px);
    for (std::size_t c = 0; c < nc; ++c) {
      g[c] = w * (p[c] - (c == t ? 1.0 : 0.0)) / static_cast<double>(n);
    }
  }
  out.value = sum / static_cast<double>(n);
  return out;
}

ConfidenceMaps confidence_maps(const RealArray& teacher_probs, const WeightMap& weights,
                               double tau_c) {
  if (!(tau_c > 0.0)) throw ValueError("confidence_maps: tau_c must be positive");
  if (teacher_probs.shape() != weights.values.shape()) {
    throw ShapeError("confidence_maps: teacher probs and weight map shapes disagree");
  }
  const Top2 t = top2_lastaxis(teacher_probs);
  const Top2 w = top2_lastaxis(softmax(weights.values, tau_c));
  ConfidenceMaps out;
  out.teacher.resize(t.first.size());
  out.proto.resize(w.first.size());
  for (std::size_t i = 0; i < t.first.size(); ++i) {
    out.teacher[i] = t.first[i] / t.second[i];
    out.proto[i] = w.first[i] / w.second[i];
  }
  return out;
}

std::vector<ContrastCase> contrast_cases(const LabelMap& pseudo, const LabelMap& proto_labels,
                                         const ConfidenceMaps& conf) {
  const std::size_t n = pseudo.size();
  if (proto_labels.size() != n || conf.teacher.size() != n || conf.proto.size() != n) {
    throw ShapeError("contrast_cases: input sizes disagree");
  }
  std::vector<ContrastCase> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (pseudo[i] == proto_labels[i]) {
      out[i] = ContrastCase::agree;
    } else if (conf.teacher[i] > conf.proto[i]) {
      out[i] = ContrastCase::teacher_wins;
    } else if (conf.teacher[i] < conf.proto[i]) {
      out[i] = ContrastCase::proto_wins;
    } else {
      out[i] = ContrastCase::tie;
    }
  }
  return out;
}

std::int32_t contrast_target(ContrastCase c, std::int32_t pseudo, std::int32_t proto) {
  return c == ContrastCase::teacher_wins ? pseudo : proto;
}

LossOutput prototype_contrast_loss(const RealArray& features, const WeightMap& weights,
                                   const LabelMap& pseudo, const LabelMap& proto_labels,
                                   const ConfidenceMaps& conf, const PrototypeBank& bank,
                                   double tau) {
  if (!(tau > 0.0)) throw ValueError("prototype_contrast_loss: tau must be positive");
  if (!bank.any_valid()) throw ValueError("prototype_contrast_loss: every class is invalid");
  if (features.rank() != 3 || features.dim(2) != bank.feature_dim()) {
    throw ShapeError("prototype_contrast_loss: feature map does not match the bank");
  }
  const std::size_t h = features.dim(0), w = features.dim(1);
  const std::size_t nc = bank.num_classes();
  const RealArray& wv = weights.values;
  if (wv.rank() != 3 || wv.dim(0) != h || wv.dim(1) != w || wv.dim(2) != nc) {
    throw ShapeError("prototype_contrast_loss: weight map shape disagrees with features");
  }
  if (pseudo.height != h || pseudo.width != w) {
    throw ShapeError("prototype_contrast_loss: pseudo-label map shape disagrees");
  }
  const auto cases = contrast_cases(pseudo, proto_labels, conf);

  const std::size_t n = h * w;
  std::vector<double> znorm(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    if (bank.valid[c]) znorm[c] = norm(bank.protos.row(c));
  }

  LossOutput out{0.0, {}, RealArray(features.shape())};
  std::vector<double> p(nc);
  double sum = 0.0;
  for (std::size_t px = 0; px < n; ++px) {
    const auto t = contrast_target(cases[px], pseudo[px], proto_labels[px]);
    if (t < 0 || static_cast<std::size_t>(t) >= nc) {
      throw ValueError("prototype_contrast_loss: label out of range");
    }
    auto s = wv.row(px);
    std::vector<double> scaled(s.begin(), s.end());
    for (double& v : scaled) v /= tau;
    sum += nll_row(scaled, static_cast<std::size_t>(t));
    softmax_row(scaled, 1.0, p);

    auto f = features.row(px);
    const double fn = norm(f);
    if (fn == 0.0) continue;
    auto g = out.grad_features.row(px);
    for (std::size_t c = 0; c < nc; ++c) {
      if (!bank.valid[c] || znorm[c] == 0.0) continue;
      const double dl_dw =
          (p[c] - (static_cast<std::size_t>(t) == c ? 1.0 : 0.0)) / (tau * static_cast<double>(n));
      add_cosine_grad(f, fn, bank.protos.row(c), znorm[c], s[c], dl_dw, g);
    }
  }
  out.value = sum / static_cast<double>(n);
  return out;
}

LossOutput total_adaptation_loss(const LossOutput& ce, const LossOutput& pce, double lambda_pce) {
  if (!(lambda_pce >= 0.0)) throw ValueError("total_adaptation_loss: lambda must be >= 0");
  LossOutput out;
  out.value = ce.value + lambda_pce * pce.value;
  out.grad_logits = combine(ce.grad_logits, pce.grad_logits, lambda_pce);
  out.grad_features = combine(ce.grad_features, pce.grad_features, lambda_pce);
  return out;
}

}  // namespace prosfda
