// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/adaptation.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>

#include "prosfda/binary_io.hpp"

namespace prosfda {
namespace {

constexpr std::string_view kStateMagic = "PSFDAST1";

void scale_in_place(ParamVector& p, double s) {
  for (double& v : p.values) v *= s;
}

void add_in_place(ParamVector& acc, const ParamVector& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

void check_images(const ModelSpec& spec, std::span<const RealArray> images, const char* what) {
  if (images.empty()) throw DataError(std::string(what) + ": dataset has no images");
  for (const RealArray& img : images) {
    if (img.rank() != 3 || img.dim(2) != spec.input_dim) {
      throw DataError(std::string(what) + ": image channels do not match the model input_dim");
    }
  }
}

WeightMap unit_weights(const Shape& shape) {
  return WeightMap{RealArray(shape, 1.0), std::vector<std::uint8_t>(shape.back(), 1)};
}

}  // namespace

std::vector<std::size_t> sample_batch(std::uint64_t seed, std::uint64_t stream,
                                      std::uint64_t step, std::size_t n, std::size_t batch_size) {
  if (n == 0) throw ValueError("sample_batch: no images to sample from");
  const std::size_t k = std::min(batch_size, n);
  Rng rng(seed, (stream << 40) | step);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

PretrainResult train_source(const RunConfig& config, const Dataset& source) {
  config.validate();
  const ModelSpec spec = config.model_spec();
  if (source.num_classes != spec.num_classes) {
    throw DataError("pretrain: dataset has " + std::to_string(source.num_classes) +
                    " classes but the model has " + std::to_string(spec.num_classes));
  }
  std::vector<RealArray> pixels;
  for (const auto& img : source.images) pixels.push_back(img.pixels);
  check_images(spec, pixels, "pretrain");

  Rng init_rng(config.seed, kInitStream);
  Model model{spec, init_params(spec, init_rng, config.init_scale)};
  OptimizerState opt = make_optimizer(model.params.size(), config.pretrain_optimizer());

  for (std::uint64_t step = 0; step < config.pretrain_steps; ++step) {
    const auto batch =
        sample_batch(config.seed, kPretrainStream, step, source.images.size(), config.batch_size);
    ParamVector grad(model.params.size(), 0.0);
    for (std::size_t i : batch) {
      const LabeledImage& img = source.images[i];
      const ForwardResult fr = forward(spec, model.params, img.pixels);
      const LossOutput loss = supervised_ce(fr.logits, img.labels);
      add_in_place(grad, backward(spec, model.params, img.pixels, {}, loss.grad_logits));
    }
    scale_in_place(grad, 1.0 / static_cast<double>(batch.size()));
    apply_step(opt, model.params, grad);
  }
  IouReport report = evaluate(model, source);
  return PretrainResult{std::move(model), std::move(report)};
}

PretrainResult pretrain_source(const RunConfig& config) {
  if (config.source_data.empty()) throw ConfigError("pretrain: source_data is not set");
  if (config.source_checkpoint.empty()) throw ConfigError("pretrain: source_checkpoint is not set");
  const Dataset source = load_dataset(config.source_data);
  PretrainResult result = train_source(config, source);
  save_model(config.source_checkpoint, result.model);
  if (!config.source_report.empty()) {
    std::ofstream os(config.source_report);
    if (!os) throw DataError("cannot open '" + config.source_report + "' for writing");
    os << format_iou_csv(result.source_report, default_class_names(source.num_classes));
  }
  return result;
}

AdaptState begin_adaptation(const RunConfig& config, const Model& source,
                            std::span<const RealArray> target_images) {
  config.validate();
  if (source.spec != config.model_spec()) {
    throw DataError("adapt: source checkpoint architecture does not match the run config");
  }
  check_images(source.spec, target_images, "adapt");
  AdaptState s;
  s.spec = source.spec;
  s.student = source.params;
  s.teacher = init_teacher(source.params, config.alpha_teacher);
  s.bank = init_prototypes(source.spec, source.params, target_images, config.alpha_proto);
  s.optimizer = make_optimizer(source.params.size(), config.adapt_optimizer());
  s.seed = config.seed;
  s.step = 0;
  return s;
}

StepRecord adapt_step(const RunConfig& config, AdaptState& state,
                      std::span<const RealArray> target_images,
                      std::span<const std::size_t> batch) {
  const ModelSpec& spec = state.spec;
  ParamVector grad(state.student.size(), 0.0);
  std::vector<RealArray> batch_features;
  std::vector<LabelMap> batch_pseudo;
  StepRecord rec;
  rec.step = state.step;
  std::size_t pixels = 0;
  std::array<std::size_t, 4> case_counts{};
  double weight_sum = 0.0;

  for (std::size_t i : batch) {
    const RealArray& img = target_images[i];
    PseudoLabels pl = pseudo_labels(spec, state.teacher, img);
    ForwardResult fr = forward(spec, state.student, img);
    const WeightMap weights = cosine_weights(fr.features, state.bank);
    const LabelMap proto = prototype_labels(weights);
    const ConfidenceMaps conf = confidence_maps(pl.probs, weights, config.tau_c);

    const WeightMap st_weights = config.identity_bank ? unit_weights(weights.values.shape()) : weights;
    const LossOutput ce = weighted_st_ce(fr.logits, pl.labels, st_weights, config.clamp_weights);
    const LossOutput pce = prototype_contrast_loss(fr.features, weights, pl.labels, proto, conf,
                                                   state.bank, config.tau);
    const LossOutput total = total_adaptation_loss(ce, pce, config.lambda_pce);
    add_in_place(grad, backward(spec, state.student, img, total.grad_features, total.grad_logits));

    rec.l_ce += ce.value;
    rec.l_pce += pce.value;
    for (ContrastCase c : contrast_cases(pl.labels, proto, conf)) {
      ++case_counts[static_cast<std::size_t>(c)];
    }
    for (std::size_t px = 0; px < pl.labels.size(); ++px) {
      double w = st_weights.values.row(px)[static_cast<std::size_t>(pl.labels[px])];
      if (config.clamp_weights) w = std::max(w, 0.0);
      weight_sum += w;
    }
    pixels += pl.labels.size();
    batch_features.push_back(std::move(fr.features));
    batch_pseudo.push_back(std::move(pl.labels));
  }

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  scale_in_place(grad, inv_b);
  apply_step(state.optimizer, state.student, grad);
  state.teacher = ema_update(std::move(state.teacher), state.student);
  state.bank = ema_refresh(std::move(state.bank),
                           batch_prototypes(batch_features, batch_pseudo, spec.num_classes));
  ++state.step;

  rec.l_ce *= inv_b;
  rec.l_pce *= inv_b;
  const double np = static_cast<double>(pixels);
  rec.frac_agree = static_cast<double>(case_counts[0]) / np;
  rec.frac_teacher = static_cast<double>(case_counts[1]) / np;
  rec.frac_proto = static_cast<double>(case_counts[2]) / np;
  rec.frac_tie = static_cast<double>(case_counts[3]) / np;
  rec.mean_weight = weight_sum / np;
  return rec;
}

void continue_adaptation(const RunConfig& config, AdaptState& state,
                         std::span<const RealArray> target_images, RunLog& log) {
  if (state.seed != config.seed) throw DataError("adapt: resume state was produced with another seed");
  while (state.step < config.adapt_steps) {
    const auto batch = sample_batch(config.seed, kAdaptStream, state.step, target_images.size(),
                                    config.batch_size);
    log.steps.push_back(adapt_step(config, state, target_images, batch));
  }
}

AdaptResult adapt(const RunConfig& config, const Model& source,
                  std::span<const RealArray> target_images) {
  AdaptResult r{begin_adaptation(config, source, target_images), {}};
  continue_adaptation(config, r.state, target_images, r.log);
  return r;
}

AdaptResult run_adaptation(const RunConfig& config) {
  config.validate();
  if (config.source_checkpoint.empty()) throw ConfigError("adapt: source_checkpoint is not set");
  if (config.target_data.empty()) throw ConfigError("adapt: target_data is not set");
  if (config.adapted_checkpoint.empty()) throw ConfigError("adapt: adapted_checkpoint is not set");

  const Model source = load_model(config.source_checkpoint);
  const UnlabeledDataset target = load_dataset_pixels(config.target_data);
  if (target.num_classes != source.spec.num_classes) {
    throw DataError("adapt: target dataset class count does not match the checkpoint");
  }

  AdaptResult r;
  if (!config.resume_from.empty()) {
    r.state = load_adapt_state(config.resume_from);
    if (r.state.spec != config.model_spec()) {
      throw DataError("adapt: resume state architecture does not match the run config");
    }
    if (!config.run_log.empty()) {
      std::ifstream probe(config.run_log);
      if (probe) r.log = load_run_log(config.run_log);
    }
    // Records past the resume point would be recomputed.
    std::erase_if(r.log.steps, [&](const StepRecord& s) { return s.step >= r.state.step; });
    check_images(r.state.spec, target.images, "adapt");
  } else {
    r.state = begin_adaptation(config, source, target.images);
  }
  continue_adaptation(config, r.state, target.images, r.log);

  save_model(config.adapted_checkpoint, Model{r.state.spec, r.state.student});
  save_adapt_state(adapt_state_path(config.adapted_checkpoint), r.state);
  if (!config.run_log.empty()) save_run_log(config.run_log, r.log);
  return r;
}

void write_adapt_state(std::ostream& os, const AdaptState& s) {
  io::write_magic(os, kStateMagic);
  io::write_u64(os, s.seed);
  io::write_u64(os, s.step);
  write_model(os, Model{s.spec, s.student});
  io::write_f64(os, s.teacher.alpha);
  io::write_f64s(os, s.teacher.params.values);
  write_bank(os, s.bank);
  write_optimizer(os, s.optimizer);
}

AdaptState read_adapt_state(std::istream& is) {
  io::expect_magic(is, kStateMagic, "adaptation state");
  AdaptState s;
  s.seed = io::read_u64(is, "state seed");
  s.step = io::read_u64(is, "state step");
  Model m = read_model(is);
  s.spec = std::move(m.spec);
  s.student = std::move(m.params);
  s.teacher.alpha = io::read_f64(is, "teacher alpha");
  if (!(s.teacher.alpha >= 0.0 && s.teacher.alpha <= 1.0)) {
    throw DataError("adaptation state: teacher alpha outside [0, 1]");
  }
  s.teacher.params = ParamVector(s.student.size());
  io::read_f64s(is, s.teacher.params.values, "teacher params");
  s.bank = read_bank(is);
  if (s.bank.num_classes() != s.spec.num_classes || s.bank.feature_dim() != s.spec.feature_dim()) {
    throw DataError("adaptation state: prototype bank does not match the model");
  }
  s.optimizer = read_optimizer(is);
  if (s.optimizer.m.size() != s.student.size()) {
    throw DataError("adaptation state: optimizer moments do not match the model");
  }
  return s;
}

void save_adapt_state(const std::string& path, const AdaptState& state) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  write_adapt_state(os, state);
  if (!os) throw DataError("failed writing '" + path + "'");
}

AdaptState load_adapt_state(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open adaptation state '" + path + "'");
  return read_adapt_state(is);
}

std::string adapt_state_path(const std::string& adapted_checkpoint) {
  return adapted_checkpoint + ".state";
}

LabelMap predict(const Model& model, const RealArray& image) {
  const ForwardResult fr = forward(model.spec, model.params, image);
  LabelMap out(image.dim(0), image.dim(1));
  out.labels = argmax_lastaxis(fr.logits);
  return out;
}

ConfusionMatrix confusion(const Model& model, const Dataset& dataset) {
  if (dataset.num_classes != model.spec.num_classes) {
    throw DataError("evaluate: dataset has " + std::to_string(dataset.num_classes) +
                    " classes but the model has " + std::to_string(model.spec.num_classes));
  }
  ConfusionMatrix cm(model.spec.num_classes);
  for (const LabeledImage& img : dataset.images) {
    if (img.pixels.rank() != 3 || img.pixels.dim(2) != model.spec.input_dim) {
      throw DataError("evaluate: image channels do not match the model input_dim");
    }
    cm.accumulate(predict(model, img.pixels), img.labels);
  }
  return cm;
}

IouReport evaluate(const Model& model, const Dataset& dataset) {
  return iou_report(confusion(model, dataset));
}

}  // namespace prosfda
