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

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "svdetect/tracks.hpp"

namespace svdetect {

enum class SmoothingMethod { kNone, kMedian, kHmm };

std::string_view smoothing_method_name(SmoothingMethod method);
/// Accepts "none", "median", "hmm".
SmoothingMethod parse_smoothing_method(std::string_view name);

struct SmoothingConfig {
  SmoothingMethod method = SmoothingMethod::kMedian;
  std::size_t median_window = 87;
  std::size_t n_components = 45;
  double variance_floor = 1e-4;
  double prune_weight = 1e-8;
  std::size_t em_max_iterations = 200;
  double em_tolerance = 1e-6;

  void validate() const;
};

/// Thresholds at 0.5, then a binary sliding median (majority vote) with
/// edge replication. Throws UsageError for an even window.
LabelTrack median_filter(const PredictionTrack& track, std::size_t window = 87);
LabelTrack median_filter(const LabelTrack& track, std::size_t window = 87);

// ---- Gaussian mixture ----------------------------------------------------------

struct GaussianMixture1D {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;

  std::size_t size() const { return weights.size(); }
  double log_pdf(double x) const;
};

struct EmOptions {
  std::size_t n_components = 45;
  std::size_t max_iterations = 200;
  /// Stop once the per-sample log-likelihood gain drops below this.
  double tolerance = 1e-6;
  double variance_floor = 1e-4;
  /// Components whose weight falls below this are dropped.
  double prune_weight = 1e-8;
};

struct EmFit {
  GaussianMixture1D mixture;
  /// Total log-likelihood before the first M-step and after every one.
  std::vector<double> log_likelihood;
  std::size_t iterations = 0;
  bool converged = false;
  /// Set when the data had less spread than the variance floor.
  bool variance_floored = false;
};

/// EM for a 1-D mixture. Means start at the data quantiles, followed by one
/// nearest-mean assignment for weights and variances. Throws DataError when
/// there are fewer points than components.
EmFit fit_gmm_em(std::span<const double> data, const EmOptions& options = {});

// ---- HMM ---------------------------------------------------------------------

inline constexpr std::size_t kNonVocal = 0;
inline constexpr std::size_t kVocal = 1;

/// Two-state HMM over classifier posteriors. State 0 is non-vocal, 1 vocal.
struct HmmGmmModel {
  std::array<double, 2> initial{0.5, 0.5};
  std::array<std::array<double, 2>, 2> transition{{{0.5, 0.5}, {0.5, 0.5}}};
  std::array<GaussianMixture1D, 2> emission;
  bool degenerate = false;

  void validate() const;
};

struct HmmFitReport {
  HmmGmmModel model;
  std::array<EmFit, 2> em;
};

/// Transitions from label counts, initial probabilities from state
/// occupancy, and one EM-fitted mixture per state on that state's
/// posteriors.
HmmFitReport fit_hmm_gmm(std::span<const PredictionTrack> tracks, std::span<const LabelTrack> labels,
                         const SmoothingConfig& config = {});

/// Most likely state path in log space. Ties go to non-vocal, resolved
/// from the last frame backwards.
LabelTrack viterbi_decode(const HmmGmmModel& model, const PredictionTrack& track);

/// log P(path, observations) under the model.
double path_log_probability(const HmmGmmModel& model, const PredictionTrack& track,
                            std::span<const std::uint8_t> path);

/// Applies the configured method. `model` is required for kHmm.
LabelTrack smooth(const PredictionTrack& track, const SmoothingConfig& config,
                  const HmmGmmModel* model = nullptr);

}  // namespace svdetect
