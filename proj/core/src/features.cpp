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

#include "svdetect/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

#include "svdetect/error.hpp"

namespace svdetect {
namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::vector<std::string> numbered_columns(std::string_view prefix, std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) names.push_back(std::string(prefix) + "_" + std::to_string(i));
  return names;
}

}  // namespace

std::string_view feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kMfcc: return "mfcc";
    case FeatureKind::kLpcc: return "lpcc";
    case FeatureKind::kPlp: return "plp";
  }
  return "unknown";
}

const std::vector<std::string>& FeatureSet::known_tags() {
  static const std::vector<std::string> tags = {"mfcc",      "lpcc",      "plp",          "mfcc_plp",
                                                "lpcc_plp",  "lpcc_mfcc", "lpcc_mfcc_plp"};
  return tags;
}

FeatureSet FeatureSet::parse(std::string_view tag) {
  const auto& tags = known_tags();
  if (std::find(tags.begin(), tags.end(), tag) == tags.end()) {
    throw UsageError("unknown feature set '" + std::string(tag) + "'");
  }
  FeatureSet set;
  std::size_t start = 0;
  while (start <= tag.size()) {
    const std::size_t end = std::min(tag.find('_', start), tag.size());
    const std::string_view part = tag.substr(start, end - start);
    if (part == "mfcc") set.parts_.push_back(FeatureKind::kMfcc);
    else if (part == "lpcc") set.parts_.push_back(FeatureKind::kLpcc);
    else set.parts_.push_back(FeatureKind::kPlp);
    start = end + 1;
  }
  return set;
}

std::string FeatureSet::tag() const {
  std::string out;
  for (const auto kind : parts_) {
    if (!out.empty()) out += '_';
    out += feature_kind_name(kind);
  }
  return out;
}

std::size_t FeatureSet::dim() const { return parts_.size() * kCoefficientCount; }

// ---- MFCC ------------------------------------------------------------------

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::MatrixXd mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sample_rate,
                               double f_min, double f_max) {
  if (n_mels == 0) throw UsageError("mel filterbank needs at least one filter");
  const double nyquist = sample_rate / 2.0;
  if (f_max <= 0.0) f_max = nyquist;
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= nyquist)) {
    throw UsageError("mel filterbank needs 0 <= f_min < f_max <= Nyquist");
  }
  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }

  const std::size_t n_bins = n_fft / 2 + 1;
  Eigen::MatrixXd bank = Eigen::MatrixXd::Zero(idx(n_mels), idx(n_bins));
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double w = 0.0;
      if (f > left && f <= center) w = (f - left) / (center - left);
      else if (f > center && f < right) w = (right - f) / (right - center);
      bank(idx(m), idx(k)) = w;
    }
  }
  return bank;
}

std::vector<double> dct_ii(std::span<const double> input, std::size_t n_out) {
  const std::size_t m = input.size();
  if (m == 0) throw UsageError("DCT of empty input");
  std::vector<double> out(n_out, 0.0);
  const double scale0 = std::sqrt(1.0 / static_cast<double>(m));
  const double scale = std::sqrt(2.0 / static_cast<double>(m));
  for (std::size_t n = 0; n < n_out; ++n) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      acc += input[j] * std::cos(std::numbers::pi * static_cast<double>(n) *
                                 (2.0 * static_cast<double>(j) + 1.0) / (2.0 * static_cast<double>(m)));
    }
    out[n] = (n == 0 ? scale0 : scale) * acc;
  }
  return out;
}

std::vector<double> mfcc_from_mel_energies(std::span<const double> mel_energies,
                                           std::size_t n_coeffs, double log_floor) {
  if (mel_energies.size() < n_coeffs + 1) {
    throw UsageError("need at least n_coeffs + 1 mel bands");
  }
  std::vector<double> logs(mel_energies.size());
  for (std::size_t i = 0; i < logs.size(); ++i) logs[i] = std::log(std::max(mel_energies[i], log_floor));
  auto cepstrum = dct_ii(logs, n_coeffs + 1);
  cepstrum.erase(cepstrum.begin());
  return cepstrum;
}

FeatureMatrix mfcc(const Spectrogram& spec, const MfccOptions& options) {
  if (options.n_mels < options.n_coeffs + 1) {
    throw UsageError("n_mels (" + std::to_string(options.n_mels) + ") must be at least n_coeffs + 1");
  }
  if (spec.bins.rows() == 0) throw DataError("mfcc of an empty spectrogram");
  const Eigen::MatrixXd bank =
      mel_filterbank(options.n_mels, spec.n_fft, spec.grid.sample_rate, options.f_min, options.f_max);
  const Eigen::MatrixXd energies = spec.power() * bank.transpose();  // frames x n_mels

  FeatureMatrix out;
  out.tag = "mfcc";
  out.grid = spec.grid;
  out.column_names = numbered_columns("mfcc", options.n_coeffs);
  out.values.resize(energies.rows(), idx(options.n_coeffs));
  std::vector<double> row(options.n_mels);
  for (Eigen::Index i = 0; i < energies.rows(); ++i) {
    for (std::size_t m = 0; m < options.n_mels; ++m) row[m] = energies(i, idx(m));
    const auto c = mfcc_from_mel_energies(row, options.n_coeffs, options.log_floor);
    for (std::size_t j = 0; j < c.size(); ++j) out.values(i, idx(j)) = c[j];
  }
  return out;
}

// ---- Linear prediction -------------------------------------------------------

std::vector<double> autocorrelation(std::span<const double> frame, std::size_t max_lag) {
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag && lag < frame.size(); ++lag) {
    double acc = 0.0;
    for (std::size_t n = lag; n < frame.size(); ++n) acc += frame[n] * frame[n - lag];
    r[lag] = acc;
  }
  return r;
}

LpcResult levinson_durbin(std::span<const double> r, std::size_t order) {
  if (r.size() < order + 1) throw UsageError("levinson_durbin needs r[0..order]");
  LpcResult result;
  result.coeffs.assign(order, 0.0);
  if (!(r[0] > std::numeric_limits<double>::min())) {
    result.degenerate = true;
    return result;
  }
  std::vector<double>& a = result.coeffs;
  std::vector<double> prev(order, 0.0);
  double err = r[0];
  for (std::size_t i = 1; i <= order; ++i) {
    double acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc -= a[j - 1] * r[i - j];
    const double k = acc / err;
    prev.assign(a.begin(), a.end());
    a[i - 1] = k;
    for (std::size_t j = 1; j < i; ++j) a[j - 1] = prev[j - 1] - k * prev[i - j - 1];
    const double next_err = err * (1.0 - k * k);
    // A perfectly predictable frame: higher-order terms stay zero.
    if (!(next_err > 0.0)) {
      err = 0.0;
      break;
    }
    err = next_err;
  }
  result.error = err;
  return result;
}

std::vector<double> lpc_to_cepstrum(std::span<const double> lpc, std::size_t n_coeffs) {
  const std::size_t p = lpc.size();
  std::vector<double> c(n_coeffs + 1, 0.0);  // c[0] unused
  for (std::size_t n = 1; n <= n_coeffs; ++n) {
    double acc = n <= p ? lpc[n - 1] : 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      const std::size_t lag = n - k;
      if (lag > p) continue;
      acc += (static_cast<double>(k) / static_cast<double>(n)) * c[k] * lpc[lag - 1];
    }
    c[n] = acc;
  }
  c.erase(c.begin());
  return c;
}

FeatureMatrix lpcc(const AudioClip& clip, const FrameGrid& grid, const LpccOptions& options) {
  if (grid.frame_len <= options.order) throw UsageError("frame length must exceed LPC order");
  if (grid.span_samples() > clip.size()) throw UsageError("frame grid exceeds clip length");

  FeatureMatrix out;
  out.tag = "lpcc";
  out.grid = grid;
  out.column_names = numbered_columns("lpcc", options.n_coeffs);
  out.values = Eigen::MatrixXd::Zero(idx(grid.n_frames), idx(options.n_coeffs));
  out.degenerate.assign(grid.n_frames, 0);

  const auto window = hamming_window(grid.frame_len);
  const auto samples = clip.samples();
  std::vector<double> frame(grid.frame_len);
  for (std::size_t i = 0; i < grid.n_frames; ++i) {
    for (std::size_t n = 0; n < grid.frame_len; ++n) frame[n] = samples[i * grid.hop + n] * window[n];
    const auto lpc = levinson_durbin(autocorrelation(frame, options.order), options.order);
    if (lpc.degenerate) {
      out.degenerate[i] = 1;
      continue;
    }
    const auto c = lpc_to_cepstrum(lpc.coeffs, options.n_coeffs);
    for (std::size_t j = 0; j < c.size(); ++j) out.values(idx(i), idx(j)) = c[j];
  }
  return out;
}

// ---- Assembly ----------------------------------------------------------------

FeatureMatrix extract_features(const AudioClip& clip, const FrameGrid& grid, const Spectrogram& spec,
                               const FeatureSet& set, const FeatureOptions& options) {
  std::vector<FeatureMatrix> parts;
  for (const auto kind : set.parts()) {
    switch (kind) {
      case FeatureKind::kMfcc: parts.push_back(mfcc(spec, options.mfcc)); break;
      case FeatureKind::kLpcc: parts.push_back(lpcc(clip, grid, options.lpcc)); break;
      case FeatureKind::kPlp: parts.push_back(plp(spec, options.plp)); break;
    }
  }
  if (parts.size() == 1) return std::move(parts.front());

  FeatureMatrix out;
  out.grid = grid;
  out.tag = set.tag();
  Eigen::Index cols = 0;
  for (const auto& p : parts) cols += p.values.cols();
  out.values.resize(idx(grid.n_frames), cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.values.middleCols(at, p.values.cols()) = p.values;
    at += p.values.cols();
    out.column_names.insert(out.column_names.end(), p.column_names.begin(), p.column_names.end());
    if (!p.degenerate.empty()) {
      if (out.degenerate.empty()) out.degenerate.assign(grid.n_frames, 0);
      for (std::size_t i = 0; i < grid.n_frames; ++i) out.degenerate[i] |= p.degenerate[i];
    }
  }
  return out;
}

NormStats fit_norm_stats(const Eigen::MatrixXd& values) {
  if (values.rows() == 0) throw DataError("cannot fit normalization on zero frames");
  return NormStats{values.colwise().minCoeff().transpose(), values.colwise().maxCoeff().transpose()};
}

Eigen::MatrixXd apply_norm(const Eigen::MatrixXd& values, const NormStats& stats) {
  if (stats.min.size() != values.cols() || stats.max.size() != values.cols()) {
    throw DataError("normalization stats have " + std::to_string(stats.min.size()) +
                    " columns, features have " + std::to_string(values.cols()));
  }
  Eigen::MatrixXd out(values.rows(), values.cols());
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const double lo = stats.min(j);
    const double range = stats.max(j) - lo;
    if (range > 0.0) {
      out.col(j) = (values.col(j).array() - lo) / range;
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

NormalizedFeatures concat_normalize(std::span<const FeatureMatrix> parts,
                                    const std::optional<NormStats>& stats) {
  if (parts.empty()) throw UsageError("concat_normalize needs at least one feature matrix");
  const std::size_t n = parts.front().n_frames();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.n_frames() != n) {
      throw DataError("frame-count mismatch between feature parts (" + std::to_string(n) + " vs " +
                      std::to_string(p.n_frames()) + ")");
    }
    cols += p.values.cols();
  }

  FeatureMatrix joined;
  joined.grid = parts.front().grid;
  joined.values.resize(idx(n), cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    joined.values.middleCols(at, p.values.cols()) = p.values;
    at += p.values.cols();
    if (!joined.tag.empty()) joined.tag += '_';
    joined.tag += p.tag;
    joined.column_names.insert(joined.column_names.end(), p.column_names.begin(), p.column_names.end());
  }

  NormalizedFeatures out;
  out.stats = stats ? *stats : fit_norm_stats(joined.values);
  joined.values = apply_norm(joined.values, out.stats);
  out.features = std::move(joined);
  return out;
}

std::vector<FrameBlock> blockify(const FeatureMatrix& feat, const LabelTrack* labels,
                                 const BlockOptions& options) {
  const std::size_t n = feat.n_frames();
  const std::size_t len = options.block_len;
  if (n == 0) throw DataError("cannot blockify an empty feature matrix");
  if (len == 0 || options.stride == 0) throw UsageError("block length and stride must be positive");
  if (labels != nullptr && labels->size() != n) {
    throw DataError("label track has " + std::to_string(labels->size()) + " frames, features have " +
                    std::to_string(n));
  }
  const std::size_t half = len / 2;
  std::vector<FrameBlock> blocks;

  auto make_block = [&](std::ptrdiff_t first, std::size_t center) {
    FrameBlock b;
    b.block.resize(idx(len), feat.values.cols());
    for (std::size_t r = 0; r < len; ++r) {
      const std::ptrdiff_t src = std::clamp<std::ptrdiff_t>(first + static_cast<std::ptrdiff_t>(r), 0,
                                                            static_cast<std::ptrdiff_t>(n) - 1);
      b.block.row(idx(r)) = feat.values.row(src);
    }
    b.center_frame_index = center;
    if (labels != nullptr) b.label = labels->labels[center];
    blocks.push_back(std::move(b));
  };

  if (options.replicate_edges) {
    for (std::size_t c = 0; c < n; c += options.stride) {
      make_block(static_cast<std::ptrdiff_t>(c) - static_cast<std::ptrdiff_t>(half), c);
    }
  } else {
    if (n < len) {
      throw DataError("need at least " + std::to_string(len) + " frames for unpadded blocks, got " +
                      std::to_string(n));
    }
    for (std::size_t start = 0; start + len <= n; start += options.stride) {
      make_block(static_cast<std::ptrdiff_t>(start), start + half);
    }
  }
  return blocks;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& feat) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write feature csv: " + path.string());
  for (std::size_t j = 0; j < feat.column_names.size(); ++j) {
    if (j) out << ',';
    out << feat.column_names[j];
  }
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < feat.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < feat.values.cols(); ++j) {
      if (j) out << ',';
      out << feat.values(i, j);
    }
    out << '\n';
  }
}

}  // namespace svdetect
