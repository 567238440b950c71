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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "svdetect/audio.hpp"
#include "svdetect/tracks.hpp"

namespace svdetect {

enum class FeatureKind { kMfcc, kLpcc, kPlp };

std::string_view feature_kind_name(FeatureKind kind);

/// One of the seven named feature sets: mfcc, lpcc, plp, mfcc_plp,
/// lpcc_plp, lpcc_mfcc, lpcc_mfcc_plp. Parts are concatenated in name order.
class FeatureSet {
 public:
  /// Throws UsageError for names outside the fixed list.
  static FeatureSet parse(std::string_view tag);
  static const std::vector<std::string>& known_tags();

  const std::vector<FeatureKind>& parts() const { return parts_; }
  std::string tag() const;
  /// 13 per part.
  std::size_t dim() const;

 private:
  std::vector<FeatureKind> parts_;
};

/// Rows are frames, columns are coefficients.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::string tag;
  FrameGrid grid;
  std::vector<std::string> column_names;
  /// Frames whose extractor hit a degenerate case (e.g. silent frame for LPC).
  /// Empty when no extractor reports flags.
  std::vector<std::uint8_t> degenerate;

  std::size_t n_frames() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
};

/// Per-column min and max learned on training data.
struct NormStats {
  Eigen::VectorXd min;
  Eigen::VectorXd max;
};

/// A run of consecutive frames fed to the classifier as one example.
struct FrameBlock {
  Eigen::MatrixXd block;  // block_len x dim
  std::uint8_t label = 0;
  std::size_t center_frame_index = 0;
};

inline constexpr std::size_t kBlockLength = 29;
inline constexpr std::size_t kCoefficientCount = 13;
inline constexpr double kLogFloor = 1e-10;

// ---- MFCC ------------------------------------------------------------------

struct MfccOptions {
  std::size_t n_coeffs = kCoefficientCount;
  std::size_t n_mels = 26;
  double log_floor = kLogFloor;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 means Nyquist
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters on the HTK mel scale, evaluated at the DFT bin
/// frequencies k*sr/n_fft. Shape n_mels x (n_fft/2+1).
Eigen::MatrixXd mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sample_rate,
                               double f_min, double f_max);

/// Orthonormal DCT-II, first n_out coefficients.
std::vector<double> dct_ii(std::span<const double> input, std::size_t n_out);

/// log(max(e, floor)) then DCT-II; returns coefficients 1..n_coeffs (c0 dropped).
std::vector<double> mfcc_from_mel_energies(std::span<const double> mel_energies,
                                           std::size_t n_coeffs, double log_floor = kLogFloor);

/// Mel energies are computed on the power spectrum. Throws UsageError if
/// n_mels < n_coeffs + 1.
FeatureMatrix mfcc(const Spectrogram& spec, const MfccOptions& options = {});

// ---- Linear prediction -------------------------------------------------------

struct LpcResult {
  /// Predictor coefficients a_1..a_p with x[n] ~ sum_k a_k x[n-k].
  std::vector<double> coeffs;
  /// Final prediction error power.
  double error = 0.0;
  /// Set when the autocorrelation is singular; coeffs are then all zero.
  bool degenerate = false;
};

/// r[0..max_lag] of the frame, unnormalized.
std::vector<double> autocorrelation(std::span<const double> frame, std::size_t max_lag);

/// Levinson-Durbin on r[0..order].
LpcResult levinson_durbin(std::span<const double> r, std::size_t order);

/// Cepstral recursion c_n = a_n + sum_{k=1}^{n-1} (k/n) c_k a_{n-k}, with
/// a_n = 0 beyond the model order. Returns c_1..c_{n_coeffs}.
std::vector<double> lpc_to_cepstrum(std::span<const double> lpc, std::size_t n_coeffs);

struct LpccOptions {
  std::size_t order = 12;
  std::size_t n_coeffs = kCoefficientCount;
};

/// LPCC on Hamming-windowed time-domain frames. Silent frames produce zero
/// rows and are flagged in FeatureMatrix::degenerate.
FeatureMatrix lpcc(const AudioClip& clip, const FrameGrid& grid, const LpccOptions& options = {});

// ---- PLP -------------------------------------------------------------------

struct PlpOptions {
  std::size_t order = 12;
  std::size_t n_coeffs = kCoefficientCount;
  std::size_t n_bands = 21;
  double compression = 1.0 / 3.0;
  double floor = kLogFloor;
};

double hz_to_bark(double hz);
double bark_to_hz(double bark);

/// Intermediate values of the PLP chain for one frame.
struct PlpStages {
  std::vector<double> band_centers_hz;
  std::vector<double> critical_band;   // Bark-band integrated power
  std::vector<double> equal_loudness;  // after loudness weighting
  std::vector<double> compressed;      // after intensity-loudness power law
  std::vector<double> autocorr;        // r[0..order]
  LpcResult lpc;
  std::vector<double> cepstra;         // c_1..c_n
};

PlpStages plp_frame(std::span<const double> power_row, std::size_t n_fft, int sample_rate,
                    const PlpOptions& options = {});

FeatureMatrix plp(const Spectrogram& spec, const PlpOptions& options = {});

// ---- Assembly ----------------------------------------------------------------

struct FeatureOptions {
  MfccOptions mfcc;
  LpccOptions lpcc;
  PlpOptions plp;
};

/// Raw (unnormalized) features of a clip for the given set, parts in
/// name order.
FeatureMatrix extract_features(const AudioClip& clip, const FrameGrid& grid, const Spectrogram& spec,
                               const FeatureSet& set, const FeatureOptions& options = {});

NormStats fit_norm_stats(const Eigen::MatrixXd& values);

/// (x - min) / (max - min); constant columns map to 0. Not clipped.
Eigen::MatrixXd apply_norm(const Eigen::MatrixXd& values, const NormStats& stats);

struct NormalizedFeatures {
  FeatureMatrix features;
  NormStats stats;
};

/// Column-wise concatenation followed by min-max scaling. Uses `stats` when
/// given, otherwise fits them on the concatenated input.
NormalizedFeatures concat_normalize(std::span<const FeatureMatrix> parts,
                                    const std::optional<NormStats>& stats = std::nullopt);

struct BlockOptions {
  std::size_t block_len = kBlockLength;
  std::size_t stride = 5;
  /// Centre a block on every stride-th frame, replicating edge frames where
  /// the block runs past either end.
  bool replicate_edges = false;
};

/// Sliding blocks over the rows of `feat`. Block labels come from the
/// centre frame (index block_len/2) when labels are given.
std::vector<FrameBlock> blockify(const FeatureMatrix& feat, const LabelTrack* labels,
                                 const BlockOptions& options = {});

/// One frame per row, header row of column names.
void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& feat);

}  // namespace svdetect
