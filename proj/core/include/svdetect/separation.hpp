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

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "svdetect/audio.hpp"

namespace svdetect {

inline constexpr double kMaskEpsilon = 1e-10;

/// Lag-domain self-similarity of a spectrogram, normalized so values[0] = 1
/// (all zeros for a silent input).
struct BeatSpectrum {
  std::vector<double> values;

  std::size_t max_lag() const { return values.empty() ? 0 : values.size() - 1; }
};

/// Element-wise weights in [0, 1], same shape as the magnitude spectrogram.
struct SoftMask {
  Eigen::MatrixXd weights;
};

struct RepetMasks {
  SoftMask accompaniment;
  SoftMask vocal;  // 1 - accompaniment
};

/// Unbiased autocorrelation over time of each frequency bin's power,
/// averaged across bins. `magnitude` is frames x bins. Lags run
/// 0..max_lag (default: n_frames - 1).
BeatSpectrum beat_spectrum(const Eigen::MatrixXd& magnitude,
                           std::optional<std::size_t> max_lag = std::nullopt);

/// Lag in [min_lag, max_lag] whose integer multiples inside the range carry
/// the largest summed beat-spectrum value above the range mean. Ties go to
/// the smaller lag.
std::size_t estimate_period(const BeatSpectrum& bs, std::size_t min_lag, std::size_t max_lag);

/// Repeating model = per-bin median across period-length segments;
/// accompaniment mask = min(model, mag) / (mag + eps).
RepetMasks repet_mask(const Eigen::MatrixXd& magnitude, std::size_t period,
                      double epsilon = kMaskEpsilon);

struct SeparationOptions {
  double frame_ms = kDefaultFrameMs;
  double hop_ms = kDefaultHopMs;
  std::size_t n_fft = kDefaultFftSize;
  double min_period_s = 0.8;
  double max_period_s = 8.0;
};

struct SeparationResult {
  AudioClip vocal;
  AudioClip accompaniment;
  std::size_t period_frames = 0;
  /// Masks applied to the mixture spectrogram.
  RepetMasks masks;
};

/// REPET separation of a mixture. Both outputs have the input's length.
/// Throws DataError when the clip is too short to hold three periods of the
/// minimum search lag.
SeparationResult separate(const AudioClip& clip, const SeparationOptions& options = {});

}  // namespace svdetect
