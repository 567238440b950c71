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

#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "svdetect/audio.hpp"

namespace svdetect::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double rms(const std::vector<double>& x, std::size_t begin = 0, std::size_t end = SIZE_MAX) {
  end = std::min(end, x.size());
  if (end <= begin) return 0.0;
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += x[i] * x[i];
  return std::sqrt(s / static_cast<double>(end - begin));
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

std::vector<double> make_loop(std::size_t loop_samples, int sample_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sr = sample_rate;
  std::vector<double> loop(loop_samples, 0.0);

  // Kick and hat on an eighth-note grid, a bass line and a sustained pad.
  const std::size_t steps = 8;
  const std::size_t step_len = loop_samples / steps;
  const double bass_root = uniform(rng, 55.0, 110.0);
  const double pad_root = uniform(rng, 180.0, 320.0);
  const double ratios[] = {1.0, 1.25, 1.5};
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t start = s * step_len;
    const bool kick = s % 4 == 0 || rng() % 3 == 0;
    const double bass = bass_root * (rng() % 2 ? 1.0 : 1.5);
    for (std::size_t n = 0; n < step_len && start + n < loop_samples; ++n) {
      const double t = n / sr;
      double v = 0.0;
      if (kick) v += 0.9 * std::exp(-t * 25.0) * std::sin(kTwoPi * (50.0 + 80.0 * std::exp(-t * 40.0)) * t);
      v += 0.25 * std::exp(-t * 60.0) * noise(rng);
      v += 0.35 * std::sin(kTwoPi * bass * t) * std::min(1.0, t * 200.0);
      loop[start + n] += v;
    }
  }
  for (std::size_t n = 0; n < loop_samples; ++n) {
    const double t = n / sr;
    double pad = 0.0;
    for (double r : ratios) {
      for (int k = 1; k <= 3; ++k) pad += std::sin(kTwoPi * pad_root * r * k * t) / (k * 3.0);
    }
    loop[n] += 0.12 * pad;
  }
  return loop;
}

std::vector<double> tile(const std::vector<double>& loop, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = loop[i % loop.size()];
  return out;
}

SynthClip make_clip(const ClipSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double sr = spec.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(spec.seconds * sr));
  const auto loop_len = static_cast<std::size_t>(std::llround(spec.loop_seconds * sr));
  const std::vector<double> accomp = tile(make_loop(loop_len, spec.sample_rate, rng()), n);

  // Alternate silence and singing, starting with either.
  SynthClip clip;
  bool on = rng() % 2 == 0;
  double t = 0.0;
  while (t < spec.seconds) {
    const double len = uniform(rng, spec.min_segment_s, spec.max_segment_s);
    const double end = std::min(spec.seconds, t + len);
    if (on && end - t > 0.2) clip.sing.emplace_back(t, end);
    on = !on;
    t = end;
  }

  std::vector<double> voice(n, 0.0);
  for (const auto& [a, b] : clip.sing) {
    const double f_start = uniform(rng, 180.0, 420.0);
    const double f_end = f_start * uniform(rng, 0.8, 1.25);
    const double vib_rate = uniform(rng, 5.0, 6.5);
    const double vib_depth = uniform(rng, 0.015, 0.03);
    const auto i0 = static_cast<std::size_t>(std::ceil(a * sr));
    const auto i1 = std::min(n, static_cast<std::size_t>(std::ceil(b * sr)));
    const double dur = b - a;
    double phase = 0.0;
    for (std::size_t i = i0; i < i1; ++i) {
      const double u = (i / sr - a);
      const double f0 = (f_start + (f_end - f_start) * u / dur) * (1.0 + vib_depth * std::sin(kTwoPi * vib_rate * u));
      phase += kTwoPi * f0 / sr;
      const double env = std::min({1.0, u / 0.03, (b - i / sr) / 0.03});
      double v = 0.0;
      for (int k = 1; k <= 12; ++k) {
        if (f0 * k >= sr / 2) break;
        v += std::sin(k * phase) / k;
      }
      voice[i] = env * v;
    }
  }

  double sung = 0.0;
  std::size_t sung_n = 0;
  for (const auto& [a, b] : clip.sing) {
    const auto i0 = static_cast<std::size_t>(std::ceil(a * sr));
    const auto i1 = std::min(n, static_cast<std::size_t>(std::ceil(b * sr)));
    const double r = rms(voice, i0, i1);
    sung += r * r * static_cast<double>(i1 - i0);
    sung_n += i1 - i0;
  }
  const double voice_rms = sung_n ? std::sqrt(sung / static_cast<double>(sung_n)) : 1.0;
  const double gain = voice_rms > 0.0 ? rms(accomp) * std::pow(10.0, spec.voice_db / 20.0) / voice_rms : 0.0;
  for (auto& v : voice) v *= gain;

  std::vector<double> mix(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mix[i] = voice[i] + accomp[i];
    peak = std::max(peak, std::abs(mix[i]));
  }
  const double scale = peak > 0.0 ? 0.9 / peak : 1.0;
  std::vector<double> acc_scaled = accomp;
  for (auto& v : mix) v *= scale;
  for (auto& v : voice) v *= scale;
  for (auto& v : acc_scaled) v *= scale;
  clip.mixture = AudioClip(std::move(mix), spec.sample_rate, "mixture");
  clip.voice = AudioClip(std::move(voice), spec.sample_rate, "voice");
  clip.accompaniment = AudioClip(std::move(acc_scaled), spec.sample_rate, "accompaniment");
  return clip;
}

TransientMix make_transient_mix(double seconds, double loop_seconds, double burst_db, int sample_rate,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sr = sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * sr));
  const auto loop_len = static_cast<std::size_t>(std::llround(loop_seconds * sr));
  std::vector<double> loop = tile(make_loop(loop_len, sample_rate, rng()), n);
  const double loop_rms = rms(loop);

  // Sparse 60 ms bursts of band-limited noise at irregular times.
  std::vector<double> bursts(n, 0.0);
  const auto burst_len = static_cast<std::size_t>(0.06 * sr);
  double t = uniform(rng, 0.3, 0.9);
  while (t + 0.06 < seconds) {
    const auto i0 = static_cast<std::size_t>(t * sr);
    const double f = uniform(rng, 1500.0, 4000.0);
    for (std::size_t k = 0; k < burst_len && i0 + k < n; ++k) {
      const double env = std::sin(std::numbers::pi * k / burst_len);
      bursts[i0 + k] = env * (noise(rng) * 0.5 + std::sin(kTwoPi * f * k / sr));
    }
    t += uniform(rng, 0.7, 1.6);
  }
  // Level is measured over the burst samples only.
  double e = 0.0;
  std::size_t cnt = 0;
  for (double v : bursts) {
    if (v != 0.0) {
      e += v * v;
      ++cnt;
    }
  }
  const double burst_rms = cnt ? std::sqrt(e / static_cast<double>(cnt)) : 1.0;
  const double gain = loop_rms * std::pow(10.0, burst_db / 20.0) / burst_rms;
  std::vector<double> mix(n);
  for (std::size_t i = 0; i < n; ++i) {
    bursts[i] *= gain;
    mix[i] = loop[i] + bursts[i];
  }
  return {AudioClip(std::move(mix), sample_rate, "transient_mix"), AudioClip(std::move(bursts), sample_rate, "bursts"),
          AudioClip(std::move(loop), sample_rate, "loop")};
}

std::filesystem::path write_corpus(const std::filesystem::path& dir, std::size_t n_clips, std::uint64_t seed,
                                   const ClipSpec& spec) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(seed);
  const auto list = dir / "list.txt";
  std::ofstream list_out(list);
  for (std::size_t c = 0; c < n_clips; ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "clip_%03zu", c);
    const SynthClip clip = make_clip(spec, rng());
    write_wav(dir / (std::string(name) + ".wav"), clip.mixture);
    std::ofstream lab(dir / (std::string(name) + ".lab"));
    lab.precision(17);
    for (const auto& [a, b] : clip.sing) lab << a << ' ' << b << " sing\n";
    list_out << name << ".wav " << name << ".lab\n";
  }
  return list;
}

}  // namespace svdetect::synth
