// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "prosfda/adaptation.hpp"
#include "prosfda/losses.hpp"

namespace {

using namespace prosfda;

RealArray random_image(Rng& rng, std::size_t h, std::size_t w, std::size_t d) {
  RealArray a({h, w, d});
  for (double& v : a.data()) v = rng.normal();
  return a;
}

const ModelSpec kSpec{8, {32, 16}, 5};

void BM_Forward(benchmark::State& state) {
  Rng rng(1);
  const ParamVector p = init_params(kSpec, rng, 1.0);
  const RealArray img = random_image(rng, 32, 32, 8);
  for (auto _ : state) benchmark::DoNotOptimize(forward(kSpec, p, img));
  state.SetItemsProcessed(state.iterations() * 32 * 32);
}
BENCHMARK(BM_Forward);

void BM_Backward(benchmark::State& state) {
  Rng rng(2);
  const ParamVector p = init_params(kSpec, rng, 1.0);
  const RealArray img = random_image(rng, 32, 32, 8);
  const RealArray gf = random_image(rng, 32, 32, 16);
  const RealArray gl = random_image(rng, 32, 32, 5);
  for (auto _ : state) benchmark::DoNotOptimize(backward(kSpec, p, img, gf, gl));
  state.SetItemsProcessed(state.iterations() * 32 * 32);
}
BENCHMARK(BM_Backward);

void BM_CosineWeights(benchmark::State& state) {
  Rng rng(3);
  const RealArray f = random_image(rng, 32, 32, 16);
  PrototypeBank bank{RealArray({5, 16}), std::vector<std::uint8_t>(5, 1), 0.99};
  for (double& v : bank.protos.data()) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(cosine_weights(f, bank));
  state.SetItemsProcessed(state.iterations() * 32 * 32);
}
BENCHMARK(BM_CosineWeights);

void BM_AdaptStep(benchmark::State& state) {
  DomainRecipe recipe;
  recipe.num_images = 4;
  const Dataset target = generate_target(recipe);
  std::vector<RealArray> images;
  for (const auto& img : target.images) images.push_back(img.pixels);
  Rng rng(4);
  const RunConfig config;
  const Model source{kSpec, init_params(kSpec, rng, 1.0)};
  AdaptState s = begin_adaptation(config, source, images);
  const std::vector<std::size_t> batch{0, 1, 2, 3};
  for (auto _ : state) benchmark::DoNotOptimize(adapt_step(config, s, images, batch));
}
BENCHMARK(BM_AdaptStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
