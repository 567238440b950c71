// Copyright 2026 The svdetect Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "svdetect/audio.hpp"
#include "svdetect/features.hpp"
#include "svdetect/lrcn.hpp"
#include "svdetect/separation.hpp"
#include "svdetect/smoothing.hpp"

namespace {

using namespace svdetect;

AudioClip noise_clip(double seconds) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.1);
  std::vector<double> x(static_cast<std::size_t>(seconds * kDefaultSampleRate));
  for (auto& v : x) v = g(rng);
  return AudioClip(std::move(x), kDefaultSampleRate);
}

void BM_Stft(benchmark::State& state) {
  const auto clip = noise_clip(10.0);
  const auto grid = frame_signal(clip);
  for (auto _ : state) benchmark::DoNotOptimize(stft(clip, grid));
}
BENCHMARK(BM_Stft)->Unit(benchmark::kMillisecond);

void BM_Mfcc(benchmark::State& state) {
  const auto clip = noise_clip(10.0);
  const auto spec = stft(clip, frame_signal(clip));
  for (auto _ : state) benchmark::DoNotOptimize(mfcc(spec));
}
BENCHMARK(BM_Mfcc)->Unit(benchmark::kMillisecond);

void BM_Separate(benchmark::State& state) {
  const auto clip = noise_clip(10.0);
  for (auto _ : state) benchmark::DoNotOptimize(separate(clip));
}
BENCHMARK(BM_Separate)->Unit(benchmark::kMillisecond);

std::vector<FrameBlock> random_blocks(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(5);
  std::vector<FrameBlock> blocks(n);
  for (std::size_t i = 0; i < n; ++i) {
    blocks[i].block = Eigen::MatrixXd::Random(kBlockLength, static_cast<Eigen::Index>(dim));
    blocks[i].label = static_cast<std::uint8_t>(rng() % 2);
  }
  return blocks;
}

void BM_LrcnForward(benchmark::State& state) {
  LrcnConfig cfg;
  cfg.n_filters = static_cast<std::size_t>(state.range(0));
  const auto params = LrcnParams::random(cfg, 1);
  const auto blocks = random_blocks(1, cfg.input_dim);
  for (auto _ : state) benchmark::DoNotOptimize(lrcn_forward_block(blocks[0].block, params));
}
BENCHMARK(BM_LrcnForward)->Arg(16)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_LrcnBackward(benchmark::State& state) {
  LrcnConfig cfg;
  cfg.n_filters = static_cast<std::size_t>(state.range(0));
  const auto params = LrcnParams::random(cfg, 1);
  const auto blocks = random_blocks(32, cfg.input_dim);
  for (auto _ : state) benchmark::DoNotOptimize(lrcn_backward(blocks, params));
}
BENCHMARK(BM_LrcnBackward)->Arg(16)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Viterbi(benchmark::State& state) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PredictionTrack track;
  std::vector<PredictionTrack> tracks(1);
  std::vector<LabelTrack> labels(1);
  for (int i = 0; i < 5000; ++i) {
    const bool v = (i / 200) % 2 == 1;
    tracks[0].posteriors.push_back(v ? 0.5 + 0.5 * u(rng) : 0.5 * u(rng));
    labels[0].labels.push_back(v ? 1 : 0);
  }
  SmoothingConfig cfg;
  cfg.n_components = 8;
  const auto model = fit_hmm_gmm(tracks, labels, cfg).model;
  for (auto _ : state) benchmark::DoNotOptimize(viterbi_decode(model, tracks[0]));
}
BENCHMARK(BM_Viterbi)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
