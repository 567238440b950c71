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

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace svdetect {

/// Canonical analysis rate. 40 ms at this rate is 640 samples.
inline constexpr int kDefaultSampleRate = 16000;
inline constexpr double kDefaultFrameMs = 40.0;
inline constexpr double kDefaultHopMs = 20.0;
inline constexpr int kDefaultFftSize = 1024;

/// Mono audio with samples in [-1, 1].
class AudioClip {
 public:
  AudioClip() = default;
  /// Throws DataError on non-finite samples or a non-positive rate.
  AudioClip(std::vector<double> samples, int sample_rate, std::string source_id = {});

  std::span<const double> samples() const { return samples_; }
  int sample_rate() const { return sample_rate_; }
  const std::string& source_id() const { return source_id_; }
  std::size_t size() const { return samples_.size(); }
  double duration_seconds() const {
    return sample_rate_ > 0 ? static_cast<double>(samples_.size()) / sample_rate_ : 0.0;
  }

 private:
  std::vector<double> samples_;
  int sample_rate_ = kDefaultSampleRate;
  std::string source_id_;
};

/// Frame i covers samples [i*hop, i*hop + frame_len).
struct FrameGrid {
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  std::size_t n_frames = 0;
  int sample_rate = kDefaultSampleRate;

  /// Time of the centre of frame i, in seconds.
  double center_seconds(std::size_t i) const {
    return (static_cast<double>(i * hop) + 0.5 * static_cast<double>(frame_len)) / sample_rate;
  }
  /// Number of samples spanned by all frames.
  std::size_t span_samples() const {
    return n_frames == 0 ? 0 : (n_frames - 1) * hop + frame_len;
  }

  bool operator==(const FrameGrid&) const = default;
};

enum class WindowKind { kHamming };

/// Positive-frequency half of a framed DFT. Rows are frames.
struct Spectrogram {
  Eigen::MatrixXcd bins;  // n_frames x (n_fft/2 + 1)
  FrameGrid grid;
  std::size_t n_fft = 0;
  WindowKind window = WindowKind::kHamming;

  std::size_t n_bins() const { return n_fft / 2 + 1; }
  Eigen::MatrixXd magnitude() const { return bins.cwiseAbs(); }
  Eigen::MatrixXd power() const { return bins.cwiseAbs2(); }
};

/// Reads RIFF/WAVE PCM16, mono or stereo. Stereo is averaged to mono and
/// samples are scaled by 1/32768. The file's sample rate is kept.
AudioClip load_wav(const std::filesystem::path& path);

/// Writes a mono PCM16 file. Samples are clipped to [-1, 32767/32768].
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

/// Linear-interpolation resampling. Returns the clip unchanged when the
/// rates already match.
AudioClip resample_linear(const AudioClip& clip, int target_rate);

/// n_frames = floor((len - frame_len) / hop) + 1; the remainder is dropped.
FrameGrid frame_signal(const AudioClip& clip, double frame_ms = kDefaultFrameMs,
                       double hop_ms = kDefaultHopMs);

/// Periodic Hamming window, 0.54 - 0.46 cos(2 pi n / N).
std::vector<double> hamming_window(std::size_t length);

/// Max relative deviation of the overlap-added window from its mean over
/// one hop period.
double cola_deviation(std::span<const double> window, std::size_t hop);

/// Hamming-windowed, zero-padded FFT of every frame. n_fft must be a power
/// of two not smaller than the frame length.
Spectrogram stft(const AudioClip& clip, const FrameGrid& grid,
                 std::size_t n_fft = kDefaultFftSize);

/// Weighted overlap-add inverse. Output has grid.span_samples() samples.
/// Throws UsageError when the window/hop pair is not constant-overlap-add
/// within 1e-6.
AudioClip istft(const Spectrogram& spec);

}  // namespace svdetect
