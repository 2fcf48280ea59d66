// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include "prosfda/adaptation.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "test_support.hpp"

namespace prosfda {
namespace {

using testing::TempDir;

// The adaptation entry point accepts pixels only.
template <class Images>
concept AdaptAccepts = requires(const RunConfig& c, const Model& m, Images s) { adapt(c, m, s); };
static_assert(AdaptAccepts<std::span<const RealArray>>);
static_assert(!AdaptAccepts<std::span<const LabeledImage>>);
static_assert(!AdaptAccepts<const Dataset&>);

DomainRecipe tiny_recipe() {
  DomainRecipe r;
  r.num_classes = 3;
  r.input_dim = 4;
  r.height = r.width = 8;
  r.num_images = 6;
  return r;
}

RunConfig tiny_config() {
  RunConfig c;
  c.input_dim = 4;
  c.hidden_dims = {8, 6};
  c.num_classes = 3;
  c.batch_size = 2;
  c.pretrain_steps = 60;
  c.adapt_steps = 12;
  c.lr = 1e-3;
  return c;
}

std::vector<RealArray> pixels_of(const Dataset& d) {
  std::vector<RealArray> out;
  for (const auto& img : d.images) out.push_back(img.pixels);
  return out;
}

class TinyRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    source_ = new Dataset(generate_source(tiny_recipe()));
    target_ = new Dataset(generate_target(tiny_recipe()));
    model_ = new Model(train_source(tiny_config(), *source_).model);
  }
  static void TearDownTestSuite() {
    delete source_;
    delete target_;
    delete model_;
  }
  static Dataset* source_;
  static Dataset* target_;
  static Model* model_;
};

Dataset* TinyRun::source_ = nullptr;
Dataset* TinyRun::target_ = nullptr;
Model* TinyRun::model_ = nullptr;

TEST(SampleBatch, DistinctInRangeAndReproducible) {
  for (std::uint64_t step = 0; step < 50; ++step) {
    const auto b = sample_batch(3, kAdaptStream, step, 10, 4);
    ASSERT_EQ(b.size(), 4u);
    EXPECT_EQ(std::set<std::size_t>(b.begin(), b.end()).size(), 4u);
    for (std::size_t i : b) EXPECT_LT(i, 10u);
    EXPECT_EQ(b, sample_batch(3, kAdaptStream, step, 10, 4));
  }
  EXPECT_NE(sample_batch(3, kAdaptStream, 0, 100, 4), sample_batch(3, kPretrainStream, 0, 100, 4));
  EXPECT_EQ(sample_batch(3, kAdaptStream, 0, 3, 8).size(), 3u);
  EXPECT_THROW(sample_batch(3, kAdaptStream, 0, 0, 1), ValueError);
}

TEST(SampleBatch, CoversEveryIndexUniformly) {
  std::vector<int> hits(5, 0);
  for (std::uint64_t step = 0; step < 5000; ++step) {
    for (std::size_t i : sample_batch(1, kAdaptStream, step, 5, 2)) ++hits[i];
  }
  for (int h : hits) EXPECT_NEAR(h, 2000, 150);
}

TEST_F(TinyRun, PretrainingFitsTheSourceDomain) {
  const IouReport r = evaluate(*model_, *source_);
  EXPECT_GT(r.overall, 80.0);
  const PretrainResult again = train_source(tiny_config(), *source_);
  EXPECT_EQ(again.model, *model_);
}

TEST_F(TinyRun, BeginAdaptationCopiesSourceAndBuildsBank) {
  const RunConfig c = tiny_config();
  const auto px = pixels_of(*target_);
  const AdaptState s = begin_adaptation(c, *model_, px);
  EXPECT_EQ(s.student, model_->params);
  EXPECT_EQ(s.teacher.params, model_->params);
  EXPECT_EQ(s.teacher.alpha, c.alpha_teacher);
  EXPECT_EQ(s.bank, init_prototypes(model_->spec, model_->params, px, c.alpha_proto));
  EXPECT_EQ(s.step, 0u);
  EXPECT_EQ(s.optimizer.step_count, 0u);

  RunConfig other = c;
  other.hidden_dims = {8};
  EXPECT_THROW(begin_adaptation(other, *model_, px), DataError);
}

TEST_F(TinyRun, FrozenSystemStaysFixed) {
  RunConfig c = tiny_config();
  c.lr = 0.0;
  c.alpha_teacher = 1.0;
  c.alpha_proto = 1.0;
  const auto px = pixels_of(*target_);
  const AdaptResult r = adapt(c, *model_, px);
  const AdaptState s0 = begin_adaptation(c, *model_, px);
  EXPECT_EQ(r.state.student, s0.student);
  EXPECT_EQ(r.state.teacher, s0.teacher);
  EXPECT_EQ(r.state.bank, s0.bank);
  EXPECT_EQ(r.state.step, c.adapt_steps);
}

TEST_F(TinyRun, LogRecordsAreConsistent) {
  const RunConfig c = tiny_config();
  const AdaptResult r = adapt(c, *model_, pixels_of(*target_));
  ASSERT_EQ(r.log.steps.size(), c.adapt_steps);
  for (std::size_t i = 0; i < r.log.steps.size(); ++i) {
    const StepRecord& s = r.log.steps[i];
    EXPECT_EQ(s.step, i);
    EXPECT_NEAR(s.frac_agree + s.frac_teacher + s.frac_proto + s.frac_tie, 1.0, 1e-12);
    EXPECT_GE(s.mean_weight, 0.0);
    EXPECT_LE(s.mean_weight, 1.0);
    EXPECT_GE(s.l_ce, 0.0);
    EXPECT_GT(s.l_pce, 0.0);
  }
  EXPECT_NE(r.state.student, model_->params);
}

TEST_F(TinyRun, ResumeMatchesUninterruptedRun) {
  const RunConfig c = tiny_config();
  const auto px = pixels_of(*target_);
  const AdaptResult full = adapt(c, *model_, px);

  RunConfig half = c;
  half.adapt_steps = 5;
  AdaptResult first = adapt(half, *model_, px);
  std::stringstream ss;
  write_adapt_state(ss, first.state);
  AdaptState resumed = read_adapt_state(ss);
  EXPECT_EQ(resumed, first.state);
  RunLog log = first.log;
  continue_adaptation(c, resumed, px, log);
  EXPECT_EQ(resumed, full.state);
  EXPECT_EQ(log, full.log);

  RunConfig other_seed = c;
  other_seed.seed = c.seed + 1;
  AdaptState s = first.state;
  EXPECT_THROW(continue_adaptation(other_seed, s, px, log), DataError);
}

TEST_F(TinyRun, FileLevelPipelineAndResume) {
  TempDir dir("adapt");
  RunConfig c = tiny_config();
  c.source_data = dir.file("s.bin");
  c.target_data = dir.file("t.bin");
  c.source_checkpoint = dir.file("src.ckpt");
  c.adapted_checkpoint = dir.file("adapted.ckpt");
  c.run_log = dir.file("log.json");
  c.source_report = dir.file("src.csv");
  save_dataset(c.source_data, *source_);
  save_dataset(c.target_data, *target_);

  const PretrainResult pre = pretrain_source(c);
  EXPECT_EQ(load_model(c.source_checkpoint), pre.model);
  EXPECT_EQ(pre.model, *model_);
  std::ifstream csv(c.source_report);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "class,iou_percent");

  const AdaptResult full = run_adaptation(c);
  EXPECT_EQ(load_model(c.adapted_checkpoint), (Model{full.state.spec, full.state.student}));
  EXPECT_EQ(load_adapt_state(adapt_state_path(c.adapted_checkpoint)), full.state);
  EXPECT_EQ(load_run_log(c.run_log), full.log);

  // Stop early, then resume from the saved state to the full length.
  RunConfig partial = c;
  partial.adapted_checkpoint = dir.file("partial.ckpt");
  partial.run_log = dir.file("partial.json");
  partial.adapt_steps = 4;
  run_adaptation(partial);
  RunConfig resume = c;
  resume.adapted_checkpoint = dir.file("resumed.ckpt");
  resume.run_log = partial.run_log;
  resume.resume_from = adapt_state_path(partial.adapted_checkpoint);
  const AdaptResult resumed = run_adaptation(resume);
  EXPECT_EQ(resumed.state, full.state);
  EXPECT_EQ(load_run_log(resume.run_log), full.log);
}

TEST_F(TinyRun, FileLevelErrors) {
  TempDir dir("adapt_err");
  RunConfig c = tiny_config();
  EXPECT_THROW(pretrain_source(c), ConfigError);
  EXPECT_THROW(run_adaptation(c), ConfigError);
  c.source_data = dir.file("missing.bin");
  c.source_checkpoint = dir.file("src.ckpt");
  EXPECT_THROW(pretrain_source(c), DataError);

  DomainRecipe wrong = tiny_recipe();
  wrong.num_classes = 4;
  save_dataset(c.source_data, generate_source(wrong));
  EXPECT_THROW(pretrain_source(c), DataError);
}

TEST(Evaluation, HandConfusion) {
  // Zero weights and a head bias favouring class 1 predict class 1 everywhere.
  const ModelSpec spec{2, {2}, 2};
  Model m{spec, ParamVector(spec.param_count())};
  m.params[param_layout(spec).back().biases + 1] = 1.0;
  Dataset d{2, {}};
  LabeledImage img{RealArray({4, 4, 2}), LabelMap(4, 4, 1)};
  for (std::size_t i = 0; i < 4; ++i) img.labels[i] = 0;
  d.images.push_back(img);
  const ConfusionMatrix cm = confusion(m, d);
  EXPECT_EQ(cm.at(0, 1), 4u);
  EXPECT_EQ(cm.at(1, 1), 12u);
  EXPECT_EQ(cm.at(0, 0), 0u);
  const IouReport r = evaluate(m, d);
  EXPECT_EQ(*r.per_class[0], 0.0);
  EXPECT_EQ(*r.per_class[1], 75.0);
  EXPECT_EQ(r.overall, 37.5);
  EXPECT_EQ(predict(m, img.pixels), LabelMap(4, 4, 1));
}

TEST(RunConfigText, RoundTripAndRejection) {
  RunConfig c = tiny_config();
  c.hidden_dims = {7, 5, 3};
  c.lr = 0.1 + 0.2;
  c.identity_bank = true;
  c.run_log = "out/log.json";
  EXPECT_EQ(parse_run_config(to_text(c)), c);
  EXPECT_THROW(parse_run_config("learning_rate = 1\n"), ConfigError);
  EXPECT_THROW(parse_run_config("tau = 0\n"), ConfigError);
  EXPECT_THROW(parse_run_config("alpha_teacher = 1.5\n"), ConfigError);
  EXPECT_THROW(parse_run_config("identity_bank = maybe\n"), ConfigError);
  EXPECT_THROW(parse_run_config("hidden_dims = \n"), ConfigError);
  EXPECT_EQ(parse_run_config("hidden_dims = 4, 4\n").hidden_dims, (std::vector<std::size_t>{4, 4}));
}

TEST(RunLogFile, RoundTripAndCsv) {
  TempDir dir("runlog");
  RunLog log;
  log.steps.push_back({0, 0.5, 1.25, 0.7, 0.1, 0.15, 0.05, 0.9});
  log.steps.push_back({1, 0.1 + 0.2, 1.0, 1.0, 0.0, 0.0, 0.0, 0.3});
  save_run_log(dir.file("l.json"), log);
  EXPECT_EQ(load_run_log(dir.file("l.json")), log);
  const std::string csv = run_log_csv(log);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "step,l_ce,l_pce,frac_agree,frac_teacher,frac_proto,frac_tie,mean_weight");
  {
    std::ofstream os(dir.file("bad.json"));
    os << "{\"format\": \"nope\"}";
  }
  EXPECT_THROW(load_run_log(dir.file("bad.json")), DataError);
}

}  // namespace
}  // namespace prosfda
