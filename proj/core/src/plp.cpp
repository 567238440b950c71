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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "svdetect/error.hpp"
#include "svdetect/features.hpp"

namespace svdetect {
namespace {

// Critical-band masking curve on the Bark axis, offset from the band centre.
double critical_band_weight(double offset) {
  if (offset < -1.3 || offset > 2.5) return 0.0;
  if (offset <= -0.5) return std::pow(10.0, 2.5 * (offset + 0.5));
  if (offset < 0.5) return 1.0;
  return std::pow(10.0, -1.0 * (offset - 0.5));
}

// Approximate equal-loudness curve at angular frequency w (rad/s).
double equal_loudness(double w) {
  const double w2 = w * w;
  return ((w2 + 56.8e6) * w2 * w2) / ((w2 + 6.3e6) * (w2 + 6.3e6) * (w2 + 0.38e9));
}

}  // namespace

double hz_to_bark(double hz) { return 6.0 * std::asinh(hz / 600.0); }
double bark_to_hz(double bark) { return 600.0 * std::sinh(bark / 6.0); }

PlpStages plp_frame(std::span<const double> power_row, std::size_t n_fft, int sample_rate,
                    const PlpOptions& options) {
  const std::size_t n_bins = n_fft / 2 + 1;
  const std::size_t bands = options.n_bands;
  if (power_row.size() != n_bins) throw UsageError("power spectrum row must have n_fft/2+1 bins");
  if (bands < 3) throw UsageError("PLP needs at least three critical bands");
  if (options.order + 1 > 2 * (bands - 1)) throw UsageError("PLP order too high for the band count");

  PlpStages st;
  const double bark_max = hz_to_bark(sample_rate / 2.0);
  std::vector<double> band_bark(bands);
  st.band_centers_hz.resize(bands);
  for (std::size_t j = 0; j < bands; ++j) {
    band_bark[j] = bark_max * static_cast<double>(j) / static_cast<double>(bands - 1);
    st.band_centers_hz[j] = bark_to_hz(band_bark[j]);
  }

  st.critical_band.assign(bands, 0.0);
  for (std::size_t k = 0; k < n_bins; ++k) {
    const double bark = hz_to_bark(static_cast<double>(k) * sample_rate / static_cast<double>(n_fft));
    for (std::size_t j = 0; j < bands; ++j) {
      st.critical_band[j] += power_row[k] * critical_band_weight(bark - band_bark[j]);
    }
  }

  st.equal_loudness.resize(bands);
  for (std::size_t j = 0; j < bands; ++j) {
    st.equal_loudness[j] =
        equal_loudness(2.0 * std::numbers::pi * st.band_centers_hz[j]) * st.critical_band[j];
  }
  // The loudness curve vanishes at DC and the top band is poorly estimated:
  // both edges copy their neighbour.
  st.equal_loudness.front() = st.equal_loudness[1];
  st.equal_loudness.back() = st.equal_loudness[bands - 2];

  st.compressed.resize(bands);
  for (std::size_t j = 0; j < bands; ++j) {
    st.compressed[j] = std::pow(std::max(st.equal_loudness[j], options.floor), options.compression);
  }

  // Inverse DFT of the even extension of the compressed spectrum.
  const double period = static_cast<double>(bands - 1);
  st.autocorr.assign(options.order + 1, 0.0);
  for (std::size_t m = 0; m <= options.order; ++m) {
    double acc = st.compressed.front() + ((m % 2 == 0) ? 1.0 : -1.0) * st.compressed.back();
    for (std::size_t j = 1; j + 1 < bands; ++j) {
      acc += 2.0 * st.compressed[j] *
             std::cos(std::numbers::pi * static_cast<double>(j) * static_cast<double>(m) / period);
    }
    st.autocorr[m] = acc / (2.0 * period);
  }

  st.lpc = levinson_durbin(st.autocorr, options.order);
  st.cepstra = lpc_to_cepstrum(st.lpc.coeffs, options.n_coeffs);
  return st;
}

FeatureMatrix plp(const Spectrogram& spec, const PlpOptions& options) {
  if (spec.bins.rows() == 0) throw DataError("plp of an empty spectrogram");
  FeatureMatrix out;
  out.tag = "plp";
  out.grid = spec.grid;
  for (std::size_t i = 1; i <= options.n_coeffs; ++i) out.column_names.push_back("plp_" + std::to_string(i));
  out.values.resize(spec.bins.rows(), static_cast<Eigen::Index>(options.n_coeffs));

  const Eigen::MatrixXd power = spec.power();
  std::vector<double> row(spec.n_bins());
  for (Eigen::Index i = 0; i < power.rows(); ++i) {
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = power(i, static_cast<Eigen::Index>(k));
    const auto st = plp_frame(row, spec.n_fft, spec.grid.sample_rate, options);
    for (std::size_t j = 0; j < st.cepstra.size(); ++j) {
      out.values(i, static_cast<Eigen::Index>(j)) = st.cepstra[j];
    }
  }
  return out;
}

}  // namespace svdetect
