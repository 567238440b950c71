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

#include "svdetect/separation.hpp"

#include <algorithm>
#include <cmath>

#include "fft.hpp"
#include "svdetect/error.hpp"

namespace svdetect {
namespace {

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

BeatSpectrum beat_spectrum(const Eigen::MatrixXd& magnitude, std::optional<std::size_t> max_lag) {
  const auto frames = static_cast<std::size_t>(magnitude.rows());
  if (frames < 2) throw DataError("beat spectrum needs at least two frames");
  const std::size_t lags = std::min(max_lag.value_or(frames - 1), frames - 1);

  // Linear (not circular) autocorrelation via a zero-padded FFT.
  const std::size_t n = next_power_of_two(2 * frames);
  std::vector<double> acc(lags + 1, 0.0);
  std::vector<double> column(frames);
  std::vector<std::complex<double>> spectrum;
  for (Eigen::Index b = 0; b < magnitude.cols(); ++b) {
    for (std::size_t t = 0; t < frames; ++t) {
      const double m = magnitude(static_cast<Eigen::Index>(t), b);
      column[t] = m * m;
    }
    spectrum = detail::rfft(column, n);
    for (auto& z : spectrum) z = std::norm(z);
    const auto corr = detail::irfft(spectrum, n);
    for (std::size_t lag = 0; lag <= lags; ++lag) acc[lag] += corr[lag] / static_cast<double>(frames - lag);
  }

  BeatSpectrum bs;
  bs.values.assign(lags + 1, 0.0);
  if (acc[0] > 0.0) {
    for (std::size_t lag = 0; lag <= lags; ++lag) bs.values[lag] = acc[lag] / acc[0];
  }
  return bs;
}

std::size_t estimate_period(const BeatSpectrum& bs, std::size_t min_lag, std::size_t max_lag) {
  if (min_lag < 1 || min_lag > max_lag || max_lag > bs.max_lag()) {
    throw UsageError("period search range [" + std::to_string(min_lag) + ", " + std::to_string(max_lag) +
                     "] is empty or outside [1, " + std::to_string(bs.max_lag()) + "]");
  }
  double mean = 0.0;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) mean += bs.values[lag];
  mean /= static_cast<double>(max_lag - min_lag + 1);

  std::size_t best = min_lag;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t p = min_lag; p <= max_lag; ++p) {
    double score = 0.0;
    for (std::size_t lag = p; lag <= max_lag; lag += p) score += bs.values[lag] - mean;
    // Scores within rounding of the incumbent count as ties; the shorter lag stays.
    if (p == min_lag || score > best_score + 1e-9 * std::max(1.0, std::abs(best_score))) {
      best_score = score;
      best = p;
    }
  }
  return best;
}

RepetMasks repet_mask(const Eigen::MatrixXd& magnitude, std::size_t period, double epsilon) {
  if (period == 0) throw UsageError("repeating period must be at least one frame");
  const auto frames = static_cast<std::size_t>(magnitude.rows());
  const Eigen::Index bins = magnitude.cols();

  // Repeating model: the median over every segment that reaches each
  // in-period position. A short final segment contributes where it exists.
  Eigen::MatrixXd model(magnitude.rows(), bins);
  std::vector<double> values;
  for (std::size_t pos = 0; pos < std::min(period, frames); ++pos) {
    for (Eigen::Index b = 0; b < bins; ++b) {
      values.clear();
      for (std::size_t t = pos; t < frames; t += period) values.push_back(magnitude(static_cast<Eigen::Index>(t), b));
      const double med = median_of(values);
      for (std::size_t t = pos; t < frames; t += period) model(static_cast<Eigen::Index>(t), b) = med;
    }
  }

  RepetMasks masks;
  masks.accompaniment.weights.resize(magnitude.rows(), bins);
  masks.vocal.weights.resize(magnitude.rows(), bins);
  for (Eigen::Index t = 0; t < magnitude.rows(); ++t) {
    for (Eigen::Index b = 0; b < bins; ++b) {
      const double mag = magnitude(t, b);
      const double acc = std::min(model(t, b), mag) / (mag + epsilon);
      masks.accompaniment.weights(t, b) = acc;
      masks.vocal.weights(t, b) = 1.0 - acc;
    }
  }
  return masks;
}

SeparationResult separate(const AudioClip& clip, const SeparationOptions& options) {
  const FrameGrid grid = frame_signal(clip, options.frame_ms, options.hop_ms);
  const double frames_per_second = static_cast<double>(clip.sample_rate()) / static_cast<double>(grid.hop);
  const auto min_lag = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(options.min_period_s * frames_per_second)));
  const auto max_lag_cfg = static_cast<std::size_t>(std::llround(options.max_period_s * frames_per_second));
  const std::size_t max_lag = std::min(max_lag_cfg, grid.n_frames / 3);
  if (grid.n_frames < 2 || max_lag < min_lag) {
    throw DataError("clip too short to estimate a repeating period (" + std::to_string(clip.duration_seconds()) +
                    " s, need three periods of " + std::to_string(options.min_period_s) + " s)");
  }

  Spectrogram spec = stft(clip, grid, options.n_fft);
  const Eigen::MatrixXd mag = spec.magnitude();
  const BeatSpectrum bs = beat_spectrum(mag, max_lag);
  const std::size_t period = estimate_period(bs, min_lag, max_lag);
  const RepetMasks masks = repet_mask(mag, period);

  auto render = [&](const SoftMask& mask) {
    Spectrogram masked = spec;
    masked.bins = spec.bins.array() * mask.weights.array().cast<std::complex<double>>();
    const AudioClip out = istft(masked);
    std::vector<double> samples(clip.size(), 0.0);
    std::copy(out.samples().begin(), out.samples().end(), samples.begin());
    return AudioClip(std::move(samples), clip.sample_rate(), clip.source_id());
  };

  SeparationResult result{render(masks.vocal), render(masks.accompaniment), period, masks};
  return result;
}

}  // namespace svdetect
