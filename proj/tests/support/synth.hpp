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

// Synthetic corpus: an exactly repeating accompaniment loop plus a gated
// vibrato "voice" made of harmonic chirps.

#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "svdetect/audio.hpp"

namespace svdetect::synth {

struct ClipSpec {
  double seconds = 10.0;
  int sample_rate = 16000;
  double loop_seconds = 2.0;
  /// Voice RMS relative to accompaniment RMS while singing.
  double voice_db = 0.0;
  double min_segment_s = 0.8;
  double max_segment_s = 2.5;
};

struct SynthClip {
  AudioClip mixture;
  AudioClip voice;
  AudioClip accompaniment;
  /// Sung intervals in seconds, sorted and disjoint.
  std::vector<std::pair<double, double>> sing;
};

std::vector<double> make_loop(std::size_t loop_samples, int sample_rate, std::uint64_t seed);

/// `loop` tiled to `n` samples; each period is bit-identical.
std::vector<double> tile(const std::vector<double>& loop, std::size_t n);

SynthClip make_clip(const ClipSpec& spec, std::uint64_t seed);

/// Loop plus short noise bursts at `burst_db` above the loop RMS.
/// Returns (mixture, bursts alone, loop alone).
struct TransientMix {
  AudioClip mixture;
  AudioClip bursts;
  AudioClip loop;
};
TransientMix make_transient_mix(double seconds, double loop_seconds, double burst_db, int sample_rate,
                                std::uint64_t seed);

/// Writes clip_NNN.wav / clip_NNN.lab and a list.txt; returns the list path.
std::filesystem::path write_corpus(const std::filesystem::path& dir, std::size_t n_clips, std::uint64_t seed,
                                   const ClipSpec& spec = {});

}  // namespace svdetect::synth
