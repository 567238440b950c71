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
#include <iomanip>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "svdetect/error.hpp"
#include "svdetect/smoothing.hpp"

using namespace svdetect;

namespace {

PredictionTrack track_of(std::vector<double> p) {
  PredictionTrack t;
  t.grid = FrameGrid{640, 320, p.size(), 16000};
  t.posteriors = std::move(p);
  return t;
}

GaussianMixture1D random_mixture(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GaussianMixture1D m;
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    m.weights.push_back(0.1 + u(rng));
    m.means.push_back(u(rng));
    m.variances.push_back(0.005 + 0.1 * u(rng));
    total += m.weights.back();
  }
  for (auto& w : m.weights) w /= total;
  return m;
}

HmmGmmModel random_model(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  HmmGmmModel m;
  const double p0 = u(rng);
  m.initial = {p0, 1.0 - p0};
  for (auto& row : m.transition) {
    const double s = u(rng);
    row = {s, 1.0 - s};
  }
  m.emission[0] = random_mixture(rng, 3);
  m.emission[1] = random_mixture(rng, 3);
  return m;
}

}  // namespace

TEST_CASE("median filter hand example") {
  const auto out = median_filter(track_of({0, 1, 0, 0, 1, 1, 1, 0}), 3);
  CHECK(out.labels == std::vector<std::uint8_t>{0, 0, 0, 0, 1, 1, 1, 0});
  CHECK(out.grid.n_frames == 8);
}

TEST_CASE("median filter keeps constant tracks and drops isolated flips") {
  const auto flat = median_filter(track_of(std::vector<double>(200, 0.9)), 87);
  CHECK(std::all_of(flat.labels.begin(), flat.labels.end(), [](auto v) { return v == 1; }));
  std::vector<double> p(300, 0.1);
  p[150] = 0.9;
  const auto out = median_filter(track_of(p), 87);
  CHECK(std::all_of(out.labels.begin(), out.labels.end(), [](auto v) { return v == 0; }));
}

TEST_CASE("median filter preserves runs of at least half the window") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> len(44, 120);
  std::vector<double> p;
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  double v = 0.2;
  while (p.size() < 3000) {
    const std::size_t n = len(rng);
    runs.emplace_back(p.size(), n);
    p.insert(p.end(), n, v);
    v = v < 0.5 ? 0.8 : 0.2;
  }
  const auto out = median_filter(track_of(p), 87);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(out.labels[i] == (p[i] >= 0.5 ? 1 : 0));
}

TEST_CASE("median filter only sees the thresholded input") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(500), b(500);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = u(rng);
    b[i] = a[i] >= 0.5 ? 0.5 + 0.5 * u(rng) : 0.49 * u(rng);
  }
  CHECK(median_filter(track_of(a), 9).labels == median_filter(track_of(b), 9).labels);
  CHECK_THROWS_AS(median_filter(track_of(a), 4), UsageError);
  CHECK_THROWS_AS(median_filter(track_of(a), 0), UsageError);
}

TEST_CASE("EM log-likelihood never decreases and weights are normalized") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n1(0.2, 0.05), n2(0.7, 0.1);
    std::bernoulli_distribution pick(0.4);
    std::vector<double> data(5000);
    for (auto& x : data) x = pick(rng) ? n1(rng) : n2(rng);
    EmOptions opt;
    opt.n_components = 5;
    const auto fit = fit_gmm_em(data, opt);
    for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
      CHECK(fit.log_likelihood[i] - fit.log_likelihood[i - 1] >= -1e-9);
    }
    double total = 0.0;
    for (double w : fit.mixture.weights) total += w;
    CHECK(std::abs(total - 1.0) < 1e-12);
    for (double var : fit.mixture.variances) CHECK(var >= opt.variance_floor);
  }
}

TEST_CASE("EM on a single Gaussian recovers the sample mean") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.4, 0.1);
  std::vector<double> data(10000);
  double mean = 0.0;
  for (auto& x : data) {
    x = n(rng);
    mean += x;
  }
  mean /= static_cast<double>(data.size());
  const auto fit = fit_gmm_em(data, {});
  double fitted = 0.0;
  for (std::size_t j = 0; j < fit.mixture.size(); ++j) fitted += fit.mixture.weights[j] * fit.mixture.means[j];
  CHECK(std::abs(fitted - mean) < 0.05);
}

TEST_CASE("EM edge cases") {
  CHECK_THROWS_AS(fit_gmm_em(std::vector<double>(10, 0.5), {}), DataError);
  EmOptions opt;
  opt.n_components = 3;
  const auto fit = fit_gmm_em(std::vector<double>(100, 0.5), opt);
  CHECK(fit.variance_floored);
  for (double var : fit.mixture.variances) CHECK(var >= opt.variance_floor);
}

TEST_CASE("HMM fit from counts") {
  std::vector<double> p(400);
  std::vector<std::uint8_t> l(400, 1);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = u(rng);
  for (std::size_t i = 0; i < 60; ++i) l[i] = 0;
  const std::vector<PredictionTrack> tracks{track_of(p)};
  const std::vector<LabelTrack> labels{LabelTrack{l, tracks[0].grid}};
  SmoothingConfig cfg;
  cfg.n_components = 4;
  const auto fit = fit_hmm_gmm(tracks, labels, cfg);
  const auto& t = fit.model.transition;
  CHECK(t[kVocal][kVocal] == doctest::Approx(1.0));
  CHECK(t[kNonVocal][kVocal] == doctest::Approx(1.0 / 60.0));
  CHECK(t[kNonVocal][0] + t[kNonVocal][1] == doctest::Approx(1.0));
  CHECK(fit.model.initial[kVocal] == doctest::Approx(340.0 / 400.0));
  fit.model.validate();

  cfg.n_components = 100;
  CHECK_THROWS_AS(fit_hmm_gmm(tracks, labels, cfg), DataError);
}

TEST_CASE("Viterbi equals exhaustive search on all thresholded paths") {
  std::mt19937_64 rng(21);
  for (int m = 0; m < 50; ++m) {
    const auto model = random_model(rng);
    for (unsigned pattern = 0; pattern < 256; ++pattern) {
      std::vector<double> obs(8);
      for (int i = 0; i < 8; ++i) obs[i] = (pattern >> i) & 1U ? 0.8 : 0.2;
      const auto track = track_of(obs);
      const auto got = viterbi_decode(model, track).labels;
      const auto want = oracle::brute_force_viterbi(model, obs);
      if (got != want) {
        std::string a, b;
        for (int i = 0; i < 8; ++i) {
          a += char('0' + got[i]);
          b += char('0' + want[i]);
        }
        MESSAGE(std::setprecision(17) << "model " << m << " pattern " << pattern << " got " << a << " "
                                      << path_log_probability(model, track, got) << " want " << b << " "
                                      << path_log_probability(model, track, want));
      }
      REQUIRE(got == want);
    }
  }
}

TEST_CASE("Viterbi path beats random alternatives") {
  std::mt19937_64 rng(22);
  const auto model = random_model(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> obs(60);
  for (auto& x : obs) x = u(rng);
  const auto track = track_of(obs);
  const auto best = viterbi_decode(model, track).labels;
  const double lp = path_log_probability(model, track, best);
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < 1000; ++k) {
    std::vector<std::uint8_t> alt(obs.size());
    for (auto& a : alt) a = coin(rng) ? 1 : 0;
    CHECK(path_log_probability(model, track, alt) <= lp + 1e-12);
  }
}

TEST_CASE("Viterbi tie rule and dominant state") {
  HmmGmmModel uniform;
  uniform.emission[0] = {{1.0}, {0.5}, {0.1}};
  uniform.emission[1] = uniform.emission[0];
  const auto ties = viterbi_decode(uniform, track_of({0.1, 0.9, 0.5, 0.7}));
  CHECK(ties.labels == std::vector<std::uint8_t>(4, 0));

  HmmGmmModel dom;
  dom.transition = {{{0.6, 0.4}, {0.3, 0.7}}};
  dom.emission[0] = {{1.0}, {0.0}, {0.01}};
  dom.emission[1] = {{1.0}, {1.0}, {0.5}};
  const auto out = viterbi_decode(dom, track_of({0.9, 0.8, 1.0, 0.95}));
  CHECK(out.labels == std::vector<std::uint8_t>(4, 1));
  CHECK_THROWS_AS(viterbi_decode(dom, track_of({})), DataError);
}

TEST_CASE("smoothing dispatch") {
  const auto t = track_of({0.2, 0.7, 0.2});
  SmoothingConfig cfg;
  cfg.method = SmoothingMethod::kNone;
  CHECK(smooth(t, cfg).labels == std::vector<std::uint8_t>{0, 1, 0});
  cfg.method = SmoothingMethod::kMedian;
  cfg.median_window = 3;
  CHECK(smooth(t, cfg).labels == std::vector<std::uint8_t>{0, 0, 0});
  cfg.method = SmoothingMethod::kHmm;
  CHECK_THROWS_AS(smooth(t, cfg), UsageError);
  CHECK(parse_smoothing_method("hmm") == SmoothingMethod::kHmm);
  CHECK(smoothing_method_name(SmoothingMethod::kMedian) == "median");
  CHECK_THROWS_AS(parse_smoothing_method("mode"), UsageError);
}
