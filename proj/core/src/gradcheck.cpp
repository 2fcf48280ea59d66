// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "prosfda/losses.hpp"
#include "prosfda/prototype_bank.hpp"
#include "prosfda/segmenter.hpp"
#include "prosfda/teacher.hpp"

namespace prosfda {
namespace {

constexpr std::size_t kSide = 3;
constexpr std::size_t kClasses = 3;
constexpr double kTau = 0.1;
constexpr double kTauC = 0.1;

std::vector<double> central_differences(std::vector<double> x, double h,
                                        const std::function<double(const std::vector<double>&)>& f) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

LabelMap random_labels(Rng& rng) {
  LabelMap m(kSide, kSide);
  for (auto& l : m.labels) l = static_cast<std::int32_t>(rng.below(kClasses));
  return m;
}

struct Instance {
  ModelSpec spec{3, {5, 4}, kClasses};
  ParamVector params;
  RealArray image;
  LabelMap labels;
  PrototypeBank bank;
};

Instance make_instance(std::uint64_t seed, std::uint64_t k) {
  Rng rng(seed, 1000 + k);
  Instance in;
  in.params = init_params(in.spec, rng, 2.0);
  for (double& b : in.params.values) b += 0.1 * rng.normal();
  in.image = RealArray({kSide, kSide, in.spec.input_dim});
  for (double& v : in.image.data()) v = rng.normal();
  in.labels = random_labels(rng);
  in.bank.protos = RealArray({kClasses, in.spec.feature_dim()});
  for (double& v : in.bank.protos.data()) v = rng.uniform(-1.0, 1.0);
  in.bank.valid.assign(kClasses, 1);
  in.bank.alpha = 0.99;
  return in;
}

// Teacher-side quantities of the contrast loss, frozen at the base point.
struct ContrastFrozen {
  LabelMap pseudo;
  LabelMap proto;
  ConfidenceMaps conf;
};

ContrastFrozen freeze_contrast(const Instance& in, const RealArray& features, const RealArray& logits) {
  ContrastFrozen fz;
  const PseudoLabels pl = pseudo_labels_from_logits(logits);
  fz.pseudo = in.labels;
  const WeightMap w = cosine_weights(features, in.bank);
  fz.proto = prototype_labels(w);
  fz.conf = confidence_maps(pl.probs, w, kTauC);
  return fz;
}

double contrast_value(const Instance& in, const ContrastFrozen& fz, const RealArray& features) {
  const WeightMap w = cosine_weights(features, in.bank);
  return prototype_contrast_loss(features, w, fz.pseudo, fz.proto, fz.conf, in.bank, kTau).value;
}

}  // namespace

double GradcheckReport::worst() const {
  double w = 0.0;
  for (const auto& c : cases) w = std::max(w, c.max_rel_error);
  return w;
}

double gradient_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0, scale = 1e-300;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return diff / scale;
}

GradcheckReport run_gradcheck(std::uint64_t seed, std::size_t instances, double step) {
  GradcheckReport report;
  for (std::uint64_t k = 0; k < instances; ++k) {
    const Instance in = make_instance(seed, k);
    const ForwardResult base = forward(in.spec, in.params, in.image);
    const RealArray& feats = base.features;
    const RealArray& logits = base.logits;

    auto with_params = [&](const std::vector<double>& p) { return forward(in.spec, ParamVector(p), in.image); };
    auto record = [&](const char* loss, const char* wrt, const std::vector<double>& a,
                      const std::vector<double>& n) {
      report.cases.push_back({loss, wrt, k, gradient_rel_error(a, n)});
    };

    // supervised cross-entropy
    {
      const LossOutput lo = supervised_ce(logits, in.labels);
      auto f_in = [&](const std::vector<double>& z) {
        return supervised_ce(RealArray(logits.shape(), z), in.labels).value;
      };
      record("supervised_ce", "inputs", lo.grad_logits.values(),
             central_differences(logits.values(), step, f_in));
      const ParamVector g = backward(in.spec, in.params, in.image, {}, lo.grad_logits);
      auto f_p = [&](const std::vector<double>& p) {
        return supervised_ce(with_params(p).logits, in.labels).value;
      };
      record("supervised_ce", "params", g.values, central_differences(in.params.values, step, f_p));
    }

    // prototype-weighted self-training; weights are constants
    {
      const WeightMap w = cosine_weights(feats, in.bank);
      const LossOutput lo = weighted_st_ce(logits, in.labels, w, true);
      auto f_in = [&](const std::vector<double>& z) {
        return weighted_st_ce(RealArray(logits.shape(), z), in.labels, w, true).value;
      };
      record("weighted_st_ce", "inputs", lo.grad_logits.values(),
             central_differences(logits.values(), step, f_in));
      const ParamVector g = backward(in.spec, in.params, in.image, {}, lo.grad_logits);
      auto f_p = [&](const std::vector<double>& p) {
        return weighted_st_ce(with_params(p).logits, in.labels, w, true).value;
      };
      record("weighted_st_ce", "params", g.values, central_differences(in.params.values, step, f_p));
    }

    // prototype contrast; gradient through the cosine similarities
    {
      const ContrastFrozen fz = freeze_contrast(in, feats, logits);
      const WeightMap w = cosine_weights(feats, in.bank);
      const LossOutput lo =
          prototype_contrast_loss(feats, w, fz.pseudo, fz.proto, fz.conf, in.bank, kTau);
      auto f_in = [&](const std::vector<double>& f) {
        return contrast_value(in, fz, RealArray(feats.shape(), f));
      };
      record("prototype_contrast", "inputs", lo.grad_features.values(),
             central_differences(feats.values(), step, f_in));
      const ParamVector g = backward(in.spec, in.params, in.image, lo.grad_features, {});
      auto f_p = [&](const std::vector<double>& p) {
        return contrast_value(in, fz, with_params(p).features);
      };
      record("prototype_contrast", "params", g.values,
             central_differences(in.params.values, step, f_p));
    }
  }
  return report;
}

}  // namespace prosfda
