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

#include "svdetect/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "svdetect/error.hpp"

namespace svdetect {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> v) {
  double hi = kNegInf;
  for (double x : v) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

double log_normal(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// E-step: responsibilities into `resp` (n x k, row-major); returns total LL.
double expectation(std::span<const double> data, const GaussianMixture1D& g, std::vector<double>& resp) {
  const std::size_t k = g.size();
  resp.resize(data.size() * k);
  std::vector<double> logs(k);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      logs[c] = std::log(g.weights[c]) + log_normal(data[i], g.means[c], g.variances[c]);
    }
    const double norm = log_sum_exp(logs);
    total += norm;
    for (std::size_t c = 0; c < k; ++c) resp[i * k + c] = std::exp(logs[c] - norm);
  }
  return total;
}

void normalize_weights(GaussianMixture1D& g) {
  const double sum = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
  for (double& w : g.weights) w /= sum;
}

void prune(GaussianMixture1D& g, double min_weight) {
  GaussianMixture1D kept;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (g.weights[c] >= min_weight) {
      kept.weights.push_back(g.weights[c]);
      kept.means.push_back(g.means[c]);
      kept.variances.push_back(g.variances[c]);
    }
  }
  if (kept.size() != g.size() && kept.size() > 0) {
    g = std::move(kept);
    normalize_weights(g);
  }
}

}  // namespace

std::string_view smoothing_method_name(SmoothingMethod method) {
  switch (method) {
    case SmoothingMethod::kNone: return "none";
    case SmoothingMethod::kMedian: return "median";
    case SmoothingMethod::kHmm: return "hmm";
  }
  return "unknown";
}

SmoothingMethod parse_smoothing_method(std::string_view name) {
  if (name == "none") return SmoothingMethod::kNone;
  if (name == "median") return SmoothingMethod::kMedian;
  if (name == "hmm") return SmoothingMethod::kHmm;
  throw UsageError("unknown smoothing method '" + std::string(name) + "'");
}

void SmoothingConfig::validate() const {
  if (median_window == 0 || median_window % 2 == 0) throw UsageError("median window must be odd and >= 1");
  if (n_components == 0) throw UsageError("mixture needs at least one component");
  if (!(variance_floor > 0.0)) throw UsageError("variance floor must be positive");
  if (em_max_iterations == 0) throw UsageError("EM iteration cap must be positive");
}

LabelTrack median_filter(const LabelTrack& track, std::size_t window) {
  if (window == 0 || window % 2 == 0) {
    throw UsageError("median window must be odd, got " + std::to_string(window));
  }
  const std::size_t n = track.size();
  LabelTrack out;
  out.grid = track.grid;
  out.labels.resize(n);
  if (n == 0) return out;

  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  // Prefix sums over the edge-replicated sequence.
  std::vector<std::size_t> prefix(n + window, 0);
  for (std::size_t j = 0; j + 1 < prefix.size(); ++j) {
    const auto src = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(j) - half, 0, last);
    prefix[j + 1] = prefix[j] + (track.labels[static_cast<std::size_t>(src)] ? 1 : 0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ones = prefix[i + window] - prefix[i];
    out.labels[i] = 2 * ones > window ? 1 : 0;
  }
  return out;
}

LabelTrack median_filter(const PredictionTrack& track, std::size_t window) {
  return median_filter(threshold_track(track), window);
}

double GaussianMixture1D::log_pdf(double x) const {
  std::vector<double> logs(size());
  for (std::size_t c = 0; c < size(); ++c) logs[c] = safe_log(weights[c]) + log_normal(x, means[c], variances[c]);
  return log_sum_exp(logs);
}

EmFit fit_gmm_em(std::span<const double> data, const EmOptions& options) {
  const std::size_t n = data.size();
  const std::size_t k = options.n_components;
  if (k == 0) throw UsageError("mixture needs at least one component");
  if (n < k) {
    throw DataError("mixture of " + std::to_string(k) + " components needs at least that many samples, got " +
                    std::to_string(n));
  }
  for (double x : data) {
    if (!std::isfinite(x)) throw DataError("EM data contains non-finite values");
  }

  EmFit fit;
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double x : sorted) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);
  fit.variance_floored = var < options.variance_floor;

  GaussianMixture1D& g = fit.mixture;
  g.means.resize(k);
  for (std::size_t c = 0; c < k; ++c) g.means[c] = quantile(sorted, (static_cast<double>(c) + 0.5) / static_cast<double>(k));

  // One hard assignment to the nearest mean (first on ties).
  std::vector<double> count(k, 0.0), sum_sq(k, 0.0);
  for (double x : data) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (std::abs(x - g.means[c]) < std::abs(x - g.means[best])) best = c;
    }
    count[best] += 1.0;
    sum_sq[best] += (x - g.means[best]) * (x - g.means[best]);
  }
  g.weights.resize(k);
  g.variances.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    g.weights[c] = (count[c] + 1.0) / static_cast<double>(n + k);
    const double v = count[c] >= 2.0 ? sum_sq[c] / count[c] : var;
    g.variances[c] = std::max(v, options.variance_floor);
  }
  normalize_weights(g);

  std::vector<double> resp;
  double ll = expectation(data, g, resp);
  fit.log_likelihood.push_back(ll);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const std::size_t kc = g.size();
    for (std::size_t c = 0; c < kc; ++c) {
      double nk = 0.0, sx = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * kc + c];
        sx += resp[i * kc + c] * data[i];
      }
      g.weights[c] = nk / static_cast<double>(n);
      if (nk <= 0.0) continue;  // pruned below
      g.means[c] = sx / nk;
      double sv = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = data[i] - g.means[c];
        sv += resp[i * kc + c] * d * d;
      }
      g.variances[c] = std::max(sv / nk, options.variance_floor);
    }
    prune(g, options.prune_weight);
    normalize_weights(g);

    const double next = expectation(data, g, resp);
    fit.log_likelihood.push_back(next);
    fit.iterations = it + 1;
    const double gain = (next - ll) / static_cast<double>(n);
    ll = next;
    if (gain < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!std::isfinite(ll)) throw NumericError("EM produced a non-finite log-likelihood");
  return fit;
}

void HmmGmmModel::validate() const {
  auto near_one = [](double s) { return std::abs(s - 1.0) < 1e-9; };
  if (!near_one(initial[0] + initial[1])) throw DataError("HMM initial probabilities must sum to 1");
  for (const auto& row : transition) {
    if (!near_one(row[0] + row[1])) throw DataError("HMM transition rows must sum to 1");
  }
  for (const auto& g : emission) {
    if (g.size() == 0 || g.means.size() != g.size() || g.variances.size() != g.size()) {
      throw DataError("HMM emission mixture is malformed");
    }
    for (double v : g.variances) {
      if (!(v > 0.0)) throw DataError("HMM emission variance must be positive");
    }
  }
}

HmmFitReport fit_hmm_gmm(std::span<const PredictionTrack> tracks, std::span<const LabelTrack> labels,
                         const SmoothingConfig& config) {
  config.validate();
  if (tracks.size() != labels.size() || tracks.empty()) {
    throw DataError("fit_hmm_gmm needs one label track per prediction track");
  }
  std::array<std::vector<double>, 2> obs;
  std::array<std::array<double, 2>, 2> counts{};
  std::array<double, 2> occupancy{};
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const auto& p = tracks[t].posteriors;
    const auto& l = labels[t].labels;
    if (p.size() != l.size()) throw DataError("prediction and label tracks differ in length");
    for (std::size_t i = 0; i < l.size(); ++i) {
      const std::size_t s = l[i] ? kVocal : kNonVocal;
      obs[s].push_back(p[i]);
      occupancy[s] += 1.0;
      if (i > 0) counts[l[i - 1] ? kVocal : kNonVocal][s] += 1.0;
    }
  }
  if (obs[kVocal].empty() || obs[kNonVocal].empty()) {
    throw DataError("HMM fitting needs both vocal and non-vocal frames");
  }

  HmmFitReport report;
  HmmGmmModel& m = report.model;
  const double total = occupancy[0] + occupancy[1];
  m.initial = {occupancy[0] / total, occupancy[1] / total};
  for (std::size_t s = 0; s < 2; ++s) {
    const double row = counts[s][0] + counts[s][1];
    if (row > 0.0) {
      m.transition[s] = {counts[s][0] / row, counts[s][1] / row};
    } else {
      m.transition[s] = {s == 0 ? 1.0 : 0.0, s == 1 ? 1.0 : 0.0};
    }
  }

  EmOptions em;
  em.n_components = config.n_components;
  em.max_iterations = config.em_max_iterations;
  em.tolerance = config.em_tolerance;
  em.variance_floor = config.variance_floor;
  em.prune_weight = config.prune_weight;
  for (std::size_t s = 0; s < 2; ++s) {
    if (obs[s].size() < config.n_components) {
      throw DataError(std::string(s == kVocal ? "vocal" : "non-vocal") + " state has " +
                      std::to_string(obs[s].size()) + " frames, fewer than " +
                      std::to_string(config.n_components) + " mixture components");
    }
    report.em[s] = fit_gmm_em(obs[s], em);
    m.emission[s] = report.em[s].mixture;
    m.degenerate = m.degenerate || report.em[s].variance_floored;
  }
  return report;
}

namespace {
constexpr double kTieTolerance = 1e-10;
}  // namespace

LabelTrack viterbi_decode(const HmmGmmModel& model, const PredictionTrack& track) {
  const std::size_t n = track.size();
  if (n == 0) throw DataError("cannot decode an empty track");

  std::array<std::array<double, 2>, 2> log_a;
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t s = 0; s < 2; ++s) log_a[r][s] = safe_log(model.transition[r][s]);
  }
  auto emission = [&](std::size_t t, std::size_t s) {
    return model.emission[s].log_pdf(track.posteriors[t]);
  };

  // Paths that tie up to summation rounding count as ties, so the result
  // does not hinge on the order the log terms were added in.
  const auto beats = [](double a, double b) {
    return a > b + kTieTolerance * std::max(1.0, std::abs(b));
  };
  std::vector<std::array<std::uint8_t, 2>> back(n);
  std::array<double, 2> delta{};
  for (std::size_t t = 0; t < n; ++t) {
    const double e0 = emission(t, 0);
    const double e1 = emission(t, 1);
    if (e0 == kNegInf && e1 == kNegInf) {
      throw NumericError("observation " + std::to_string(t) + " has zero likelihood under both states");
    }
    if (t == 0) {
      delta = {safe_log(model.initial[0]) + e0, safe_log(model.initial[1]) + e1};
      continue;
    }
    std::array<double, 2> next{};
    for (std::size_t s = 0; s < 2; ++s) {
      const double from0 = delta[0] + log_a[0][s];
      const double from1 = delta[1] + log_a[1][s];
      const bool pick1 = beats(from1, from0);
      back[t][s] = pick1 ? 1 : 0;
      next[s] = (pick1 ? from1 : from0) + (s == 0 ? e0 : e1);
    }
    delta = next;
  }
  if (delta[0] == kNegInf && delta[1] == kNegInf) {
    throw NumericError("every state path has zero probability");
  }

  LabelTrack out;
  out.grid = track.grid;
  out.labels.resize(n);
  std::uint8_t state = beats(delta[1], delta[0]) ? 1 : 0;
  for (std::size_t t = n; t-- > 0;) {
    out.labels[t] = state;
    if (t > 0) state = back[t][state];
  }
  return out;
}

double path_log_probability(const HmmGmmModel& model, const PredictionTrack& track,
                            std::span<const std::uint8_t> path) {
  if (path.size() != track.size()) throw UsageError("path and track lengths differ");
  if (path.empty()) return 0.0;
  double lp = safe_log(model.initial[path[0]]) + model.emission[path[0]].log_pdf(track.posteriors[0]);
  for (std::size_t t = 1; t < path.size(); ++t) {
    lp += safe_log(model.transition[path[t - 1]][path[t]]) + model.emission[path[t]].log_pdf(track.posteriors[t]);
  }
  return lp;
}

LabelTrack smooth(const PredictionTrack& track, const SmoothingConfig& config, const HmmGmmModel* model) {
  switch (config.method) {
    case SmoothingMethod::kNone: return threshold_track(track);
    case SmoothingMethod::kMedian: return median_filter(track, config.median_window);
    case SmoothingMethod::kHmm:
      if (model == nullptr) throw UsageError("HMM smoothing needs a fitted model");
      return viterbi_decode(*model, track);
  }
  throw UsageError("unknown smoothing method");
}

}  // namespace svdetect
