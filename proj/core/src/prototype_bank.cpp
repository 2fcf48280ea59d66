// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/prototype_bank.hpp"

#include <algorithm>
#include <cmath>

#include "prosfda/binary_io.hpp"

namespace prosfda {
namespace {

constexpr std::string_view kBankMagic = "PSFDAPB1";

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

bool PrototypeBank::any_valid() const {
  return std::any_of(valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; });
}

BatchPrototypes batch_prototypes(std::span<const RealArray> features,
                                 std::span<const LabelMap> pseudo, std::size_t num_classes) {
  if (features.size() != pseudo.size()) {
    throw ShapeError("batch_prototypes: feature and label batches differ in length");
  }
  if (features.empty()) throw ShapeError("batch_prototypes: empty batch");
  const std::size_t d = features.front().last_dim();
  BatchPrototypes out{RealArray({num_classes, d}), std::vector<std::uint64_t>(num_classes, 0)};

  for (std::size_t i = 0; i < features.size(); ++i) {
    const RealArray& f = features[i];
    const LabelMap& p = pseudo[i];
    if (f.rank() != 3 || f.dim(2) != d || f.dim(0) != p.height || f.dim(1) != p.width) {
      throw ShapeError("batch_prototypes: feature map and label map shapes disagree");
    }
    for (std::size_t px = 0; px < p.size(); ++px) {
      const auto c = static_cast<std::size_t>(p[px]);
      if (p[px] < 0 || c >= num_classes) throw ValueError("batch_prototypes: label out of range");
      auto row = out.protos.row(c);
      auto fr = f.row(px);
      for (std::size_t k = 0; k < d; ++k) row[k] += fr[k];
      ++out.counts[c];
    }
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (out.counts[c] == 0) continue;
    const double n = static_cast<double>(out.counts[c]);
    for (double& v : out.protos.row(c)) v /= n;
  }
  return out;
}

PrototypeBank init_prototypes(const ModelSpec& spec, const ParamVector& source_params,
                              std::span<const RealArray> target_images, double alpha) {
  if (target_images.empty()) throw ValueError("init_prototypes: no target images");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValueError("init_prototypes: alpha must lie in [0, 1]");
  std::vector<RealArray> feats;
  std::vector<LabelMap> labels;
  feats.reserve(target_images.size());
  labels.reserve(target_images.size());
  for (const RealArray& img : target_images) {
    ForwardResult fr = forward(spec, source_params, img);
    LabelMap lm(img.dim(0), img.dim(1));
    lm.labels = argmax_lastaxis(fr.logits);
    feats.push_back(std::move(fr.features));
    labels.push_back(std::move(lm));
  }
  BatchPrototypes b = batch_prototypes(feats, labels, spec.num_classes);
  PrototypeBank bank;
  bank.protos = std::move(b.protos);
  bank.alpha = alpha;
  bank.valid.resize(spec.num_classes);
  for (std::size_t c = 0; c < spec.num_classes; ++c) bank.valid[c] = b.counts[c] > 0 ? 1 : 0;
  return bank;
}

PrototypeBank ema_refresh(PrototypeBank bank, const BatchPrototypes& batch) {
  if (batch.protos.shape() != bank.protos.shape() || batch.counts.size() != bank.num_classes()) {
    throw ShapeError("ema_refresh: batch prototypes do not match the bank");
  }
  const double a = bank.alpha;
  const double b = 1.0 - a;
  for (std::size_t c = 0; c < bank.num_classes(); ++c) {
    if (batch.counts[c] == 0) continue;
    auto z = bank.protos.row(c);
    auto zb = batch.protos.row(c);
    if (!bank.valid[c]) {
      std::copy(zb.begin(), zb.end(), z.begin());
      bank.valid[c] = 1;
      continue;
    }
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = a * z[k] + b * zb[k];
  }
  return bank;
}

WeightMap cosine_weights(const RealArray& features, const PrototypeBank& bank) {
  if (features.rank() != 3 || features.dim(2) != bank.feature_dim()) {
    throw ShapeError("cosine_weights: feature dimension does not match the bank");
  }
  const std::size_t nc = bank.num_classes();
  WeightMap out{RealArray({features.dim(0), features.dim(1), nc}), bank.valid};
  std::vector<double> znorm(nc);
  for (std::size_t c = 0; c < nc; ++c) znorm[c] = bank.valid[c] ? norm(bank.protos.row(c)) : 0.0;

  for (std::size_t px = 0; px < features.rows(); ++px) {
    auto f = features.row(px);
    const double fn = norm(f);
    auto w = out.values.row(px);
    for (std::size_t c = 0; c < nc; ++c) {
      if (!bank.valid[c]) {
        w[c] = -1.0;
        continue;
      }
      if (fn == 0.0 || znorm[c] == 0.0) {
        w[c] = 0.0;
        continue;
      }
      auto z = bank.protos.row(c);
      double dot = 0.0;
      for (std::size_t k = 0; k < f.size(); ++k) dot += f[k] * z[k];
      w[c] = std::clamp(dot / (fn * znorm[c]), -1.0, 1.0);
    }
  }
  return out;
}

LabelMap prototype_labels(const WeightMap& weights) {
  const auto& v = weights.values;
  if (v.rank() != 3 || weights.class_valid.size() != v.dim(2)) {
    throw ShapeError("prototype_labels: weight map must be H x W x C with C validity flags");
  }
  const auto first_valid = std::find(weights.class_valid.begin(), weights.class_valid.end(), 1);
  if (first_valid == weights.class_valid.end()) {
    throw ValueError("prototype_labels: every class is invalid");
  }
  const auto c0 = static_cast<std::size_t>(first_valid - weights.class_valid.begin());
  LabelMap out(v.dim(0), v.dim(1));
  for (std::size_t px = 0; px < v.rows(); ++px) {
    auto w = v.row(px);
    std::size_t best = c0;
    for (std::size_t c = c0 + 1; c < w.size(); ++c) {
      if (weights.class_valid[c] && w[c] > w[best]) best = c;
    }
    out[px] = static_cast<std::int32_t>(best);
  }
  return out;
}

void write_bank(std::ostream& os, const PrototypeBank& bank) {
  io::write_magic(os, kBankMagic);
  io::write_u64(os, bank.num_classes());
  io::write_u64(os, bank.feature_dim());
  io::write_f64(os, bank.alpha);
  for (std::uint8_t v : bank.valid) io::write_u64(os, v);
  io::write_f64s(os, bank.protos.data());
}

PrototypeBank read_bank(std::istream& is) {
  io::expect_magic(is, kBankMagic, "prototype bank");
  const auto c = io::read_count(is, 1u << 20, "bank num_classes");
  const auto d = io::read_count(is, 1u << 20, "bank feature_dim");
  PrototypeBank bank;
  bank.alpha = io::read_f64(is, "bank alpha");
  if (!(bank.alpha >= 0.0 && bank.alpha <= 1.0)) throw DataError("prototype bank: alpha outside [0, 1]");
  bank.valid.resize(c);
  for (auto& v : bank.valid) {
    const auto flag = io::read_u64(is, "bank validity mask");
    if (flag > 1) throw DataError("prototype bank: validity flag must be 0 or 1");
    v = static_cast<std::uint8_t>(flag);
  }
  bank.protos = RealArray({c, d});
  io::read_f64s(is, bank.protos.data(), "bank rows");
  return bank;
}

}  // namespace prosfda
