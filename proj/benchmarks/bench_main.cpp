// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "disc/audio.hpp"
#include "disc/config.hpp"
#include "disc/corpus.hpp"
#include "disc/ops.hpp"
#include "disc/trainer.hpp"

namespace {

using namespace disc;

Tensor uniform_tensor(Shape shape, Rng& rng) {
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return Tensor::from(std::move(shape), std::move(v), true);
}

void BM_Conv1dForwardBackward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const std::size_t frames = 128;
  const std::size_t kernel = 5;
  Rng rng(3);
  const Tensor x = uniform_tensor({channels, frames}, rng);
  const Tensor w = uniform_tensor({channels, channels, kernel}, rng);
  for (auto _ : state) {
    const Tensor y = sum(conv1d(x, w, 1, kernel / 2));
    backward(y);
    benchmark::DoNotOptimize(w.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(channels * channels * kernel * frames));
}
BENCHMARK(BM_Conv1dForwardBackward)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Stft(benchmark::State& state) {
  const AudioClip clip = sawtooth(180.0, 1.0, 16000);
  for (auto _ : state) {
    const Spectrogram s = stft(clip.samples, 1024, 256);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_Stft)->Unit(benchmark::kMillisecond);

void BM_TrainStepToy(benchmark::State& state) {
  RunConfig cfg = toy_preset();
  cfg.train.batch_size = static_cast<std::size_t>(state.range(0));
  Dataset data;
  data.num_speakers = cfg.model.num_speakers;
  Rng rng(5);
  for (std::size_t s = 0; s < data.num_speakers; ++s) {
    Utterance u;
    u.id = "u" + std::to_string(s);
    u.speaker = SpeakerId{static_cast<int>(s + 1)};
    u.x = Matrix(cfg.model.n_mels, 200);
    for (auto& v : u.x.values) v = static_cast<float>(rng.normal());
    u.f0.values.resize(200);
    for (std::size_t t = 0; t < 200; ++t) u.f0.values[t] = t % 7 == 0 ? 0.0f : 5.0f + 0.1f * std::sin(0.05f * t);
    data.utterances.push_back(std::move(u));
  }
  TrainState train = init_train_state(cfg.model, cfg.train);
  const BatchSampler sampler(data, cfg.train);
  for (auto _ : state) {
    const Batch batch = sampler.next(train.rng);
    benchmark::DoNotOptimize(train_step(batch, train, cfg.train));
  }
}
BENCHMARK(BM_TrainStepToy)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
