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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace svdetect::oracle {
namespace {

constexpr double kPi = std::numbers::pi;

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double gmm_log_pdf(const GaussianMixture1D& g, double x) {
  double p = 0.0;
  for (std::size_t m = 0; m < g.weights.size(); ++m) {
    const double v = g.variances[m];
    p += g.weights[m] * std::exp(-0.5 * (x - g.means[m]) * (x - g.means[m]) / v) / std::sqrt(2.0 * kPi * v);
  }
  return std::log(p);
}

}  // namespace

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft) {
  const std::size_t n = frame.size();
  std::vector<double> out(n_fft / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double w = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(t) / static_cast<double>(n));
      const double ang = 2.0 * kPi * static_cast<double>((k * t) % n_fft) / static_cast<double>(n_fft);
      re += frame[t] * w * std::cos(ang);
      im -= frame[t] * w * std::sin(ang);
    }
    out[k] = re * re + im * im;
  }
  return out;
}

std::vector<double> mfcc_frame(std::span<const double> power, std::size_t n_fft, int sample_rate,
                               std::size_t n_mels, std::size_t n_coeffs, double log_floor) {
  const auto mel = [](double f) { return 1127.0 * std::log(1.0 + f / 700.0); };
  const auto inv_mel = [](double m) { return 700.0 * (std::exp(m / 1127.0) - 1.0); };
  const double top = mel(sample_rate / 2.0);
  std::vector<double> logs(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = inv_mel(top * static_cast<double>(m) / static_cast<double>(n_mels + 1));
    const double mid = inv_mel(top * static_cast<double>(m + 1) / static_cast<double>(n_mels + 1));
    const double hi = inv_mel(top * static_cast<double>(m + 2) / static_cast<double>(n_mels + 1));
    double e = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      e += w * power[k];
    }
    logs[m] = std::log(std::max(e, log_floor));
  }
  std::vector<double> c(n_coeffs);
  for (std::size_t q = 1; q <= n_coeffs; ++q) {
    double acc = 0.0;
    for (std::size_t m = 0; m < n_mels; ++m) {
      acc += logs[m] * std::cos(kPi * static_cast<double>(q) * (static_cast<double>(m) + 0.5) / static_cast<double>(n_mels));
    }
    c[q - 1] = std::sqrt(2.0 / static_cast<double>(n_mels)) * acc;
  }
  return c;
}

std::vector<double> autocorr(std::span<const double> x, std::size_t order) {
  std::vector<double> r(order + 1, 0.0);
  for (std::size_t lag = 0; lag <= order; ++lag) {
    for (std::size_t t = lag; t < x.size(); ++t) r[lag] += x[t] * x[t - lag];
  }
  return r;
}

std::vector<double> lpc_dense(std::span<const double> r, std::size_t order) {
  const auto p = static_cast<Eigen::Index>(order);
  Eigen::MatrixXd R(p, p);
  Eigen::VectorXd rhs(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    rhs(i) = r[static_cast<std::size_t>(i + 1)];
    for (Eigen::Index j = 0; j < p; ++j) R(i, j) = r[static_cast<std::size_t>(std::abs(i - j))];
  }
  const Eigen::VectorXd a = R.fullPivLu().solve(rhs);
  return {a.data(), a.data() + a.size()};
}

std::vector<double> allpole_cepstrum(std::span<const double> lpc, std::size_t n_coeffs, std::size_t grid) {
  std::vector<double> log_mag(grid);
  for (std::size_t m = 0; m < grid; ++m) {
    const double w = 2.0 * kPi * static_cast<double>(m) / static_cast<double>(grid);
    std::complex<double> a = 1.0;
    for (std::size_t k = 0; k < lpc.size(); ++k) a -= lpc[k] * std::polar(1.0, -w * static_cast<double>(k + 1));
    log_mag[m] = -std::log(std::abs(a));
  }
  std::vector<double> c(n_coeffs);
  for (std::size_t n = 1; n <= n_coeffs; ++n) {
    double acc = 0.0;
    for (std::size_t m = 0; m < grid; ++m) {
      acc += log_mag[m] * std::cos(2.0 * kPi * static_cast<double>((m * n) % grid) / static_cast<double>(grid));
    }
    c[n - 1] = 2.0 * acc / static_cast<double>(grid);
  }
  return c;
}

PlpReference plp_frame(std::span<const double> power, std::size_t n_fft, int sample_rate, std::size_t n_bands,
                       std::size_t order, std::size_t n_coeffs, double compression, double floor) {
  PlpReference ref;
  const auto bark = [](double f) { return 6.0 * std::log(f / 600.0 + std::sqrt(1.0 + (f / 600.0) * (f / 600.0))); };
  const double top = bark(sample_rate / 2.0);
  std::vector<double> centre_bark(n_bands);
  for (std::size_t j = 0; j < n_bands; ++j) {
    centre_bark[j] = top * static_cast<double>(j) / static_cast<double>(n_bands - 1);
    ref.band_centers_hz.push_back(300.0 * (std::exp(centre_bark[j] / 6.0) - std::exp(-centre_bark[j] / 6.0)));
  }

  // Stage 1: critical-band integration with the trapezoidal masking curve.
  for (std::size_t j = 0; j < n_bands; ++j) {
    double e = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) {
      const double d = bark(static_cast<double>(k) * sample_rate / static_cast<double>(n_fft)) - centre_bark[j];
      double w = 0.0;
      if (d >= -1.3 && d <= -0.5) w = std::pow(10.0, 2.5 * (d + 0.5));
      else if (d > -0.5 && d < 0.5) w = 1.0;
      else if (d >= 0.5 && d <= 2.5) w = std::pow(10.0, -(d - 0.5));
      e += w * power[k];
    }
    ref.critical_band.push_back(e);
  }

  // Stage 2: equal-loudness weighting; edge bands copy their neighbours.
  for (std::size_t j = 0; j < n_bands; ++j) {
    const double w = 2.0 * kPi * ref.band_centers_hz[j];
    const double w2 = w * w;
    const double el = (w2 + 56.8e6) * w2 * w2 / ((w2 + 6.3e6) * (w2 + 6.3e6) * (w2 + 0.38e9));
    ref.equal_loudness.push_back(el * ref.critical_band[j]);
  }
  ref.equal_loudness[0] = ref.equal_loudness[1];
  ref.equal_loudness[n_bands - 1] = ref.equal_loudness[n_bands - 2];

  // Stage 3: intensity-loudness power law.
  for (double v : ref.equal_loudness) ref.compressed.push_back(std::pow(std::max(v, floor), compression));

  // Stage 4: inverse DFT of the explicit even extension.
  const std::size_t m_len = 2 * (n_bands - 1);
  std::vector<double> ext(m_len);
  for (std::size_t j = 0; j < n_bands; ++j) ext[j] = ref.compressed[j];
  for (std::size_t j = 1; j + 1 < n_bands; ++j) ext[m_len - j] = ref.compressed[j];
  for (std::size_t lag = 0; lag <= order; ++lag) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < m_len; ++j) {
      acc += ext[j] * std::polar(1.0, 2.0 * kPi * static_cast<double>(j * lag) / static_cast<double>(m_len));
    }
    ref.autocorr.push_back(acc.real() / static_cast<double>(m_len));
  }

  // Stage 5: all-pole fit and its cepstrum.
  ref.lpc = lpc_dense(ref.autocorr, order);
  ref.cepstra = allpole_cepstrum(ref.lpc, n_coeffs);
  return ref;
}

std::vector<std::uint8_t> brute_force_viterbi(const HmmGmmModel& model, std::span<const double> obs) {
  const std::size_t n = obs.size();
  std::vector<std::array<double, 2>> emit(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t s = 0; s < 2; ++s) emit[t][s] = gmm_log_pdf(model.emission[s], obs[t]);
  }
  double best = -std::numeric_limits<double>::infinity();
  std::uint64_t best_code = 0;
  for (std::uint64_t code = 0; code < (1ULL << n); ++code) {
    const auto state = [&](std::size_t t) { return static_cast<std::size_t>((code >> t) & 1U); };
    double lp = std::log(model.initial[state(0)]) + emit[0][state(0)];
    for (std::size_t t = 1; t < n; ++t) lp += std::log(model.transition[state(t - 1)][state(t)]) + emit[t][state(t)];
    if (code == 0 || lp > best + 1e-10 * std::max(1.0, std::abs(best))) {
      best = lp;
      best_code = code;
    }
  }
  std::vector<std::uint8_t> path(n);
  for (std::size_t t = 0; t < n; ++t) path[t] = static_cast<std::uint8_t>((best_code >> t) & 1U);
  return path;
}

double reference_batch_loss(std::span<const FrameBlock> batch, const LrcnParams& p) {
  const auto& cfg = p.config;
  const std::size_t dim = cfg.input_dim, nf = cfg.n_filters, kw = cfg.kernel_width, hd = cfg.hidden;
  const std::size_t zd = nf * dim;
  const std::size_t pad = (kw - 1) / 2;
  double total = 0.0;
  for (const auto& sample : batch) {
    std::vector<double> h(hd, 0.0), c(hd, 0.0);
    for (std::size_t t = 0; t < cfg.block_len; ++t) {
      std::vector<double> z(zd, 0.0);
      for (std::size_t k = 0; k < nf; ++k) {
        for (std::size_t d = 0; d < dim; ++d) {
          for (std::size_t j = 0; j < kw; ++j) {
            const long src = static_cast<long>(d + j) - static_cast<long>(pad);
            if (src >= 0 && src < static_cast<long>(dim)) {
              z[k * dim + d] += p.conv(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) *
                                sample.block(static_cast<Eigen::Index>(t), src);
            }
          }
        }
      }
      // Gate input is [z, h_prev, c_prev]; the output gate sees the new c.
      const auto affine = [&](const Eigen::MatrixXd& w, const Eigen::VectorXd& b, std::size_t r,
                              const std::vector<double>& third) {
        double a = b(static_cast<Eigen::Index>(r));
        const auto R = static_cast<Eigen::Index>(r);
        for (std::size_t q = 0; q < zd; ++q) a += w(R, static_cast<Eigen::Index>(q)) * z[q];
        for (std::size_t q = 0; q < hd; ++q) a += w(R, static_cast<Eigen::Index>(zd + q)) * h[q];
        if (!third.empty()) {
          for (std::size_t q = 0; q < hd; ++q) a += w(R, static_cast<Eigen::Index>(zd + hd + q)) * third[q];
        }
        return a;
      };
      std::vector<double> ig(hd), fg(hd), gg(hd), cn(hd), hn(hd);
      for (std::size_t r = 0; r < hd; ++r) {
        ig[r] = logistic(affine(p.w_i, p.b_i, r, c));
        fg[r] = logistic(affine(p.w_f, p.b_f, r, c));
        gg[r] = std::tanh(affine(p.w_c, p.b_c, r, {}));
        cn[r] = fg[r] * c[r] + ig[r] * gg[r];
      }
      for (std::size_t r = 0; r < hd; ++r) hn[r] = logistic(affine(p.w_o, p.b_o, r, cn)) * std::tanh(cn[r]);
      h = hn;
      c = cn;
    }
    std::vector<double> layer;
    for (std::size_t j = 0; j * cfg.pool < hd; ++j) {
      double m = h[j * cfg.pool];
      for (std::size_t k = j * cfg.pool; k < std::min(hd, (j + 1) * cfg.pool); ++k) m = std::max(m, h[k]);
      layer.push_back(m);
    }
    for (std::size_t l = 0; l < p.dense_w.size(); ++l) {
      std::vector<double> next(static_cast<std::size_t>(p.dense_w[l].rows()));
      for (std::size_t r = 0; r < next.size(); ++r) {
        double a = p.dense_b[l](static_cast<Eigen::Index>(r));
        for (std::size_t q = 0; q < layer.size(); ++q) {
          a += p.dense_w[l](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) * layer[q];
        }
        next[r] = std::tanh(a);
      }
      layer = std::move(next);
    }
    double logit = p.out_b;
    for (std::size_t q = 0; q < layer.size(); ++q) logit += p.out_w(static_cast<Eigen::Index>(q)) * layer[q];
    const double y = sample.label ? 1.0 : 0.0;
    const double prob = logistic(logit);
    total += -(y * std::log(prob) + (1.0 - y) * std::log(1.0 - prob));
  }
  return total / static_cast<double>(batch.size());
}

double numeric_gradient(std::span<const FrameBlock> batch, const LrcnParams& params, std::size_t k,
                        double delta) {
  std::vector<double> flat = params.flatten();
  LrcnParams probe = params;
  const double orig = flat[k];
  flat[k] = orig + delta;
  probe.unflatten(flat);
  const double up = reference_batch_loss(batch, probe);
  flat[k] = orig - delta;
  probe.unflatten(flat);
  const double down = reference_batch_loss(batch, probe);
  return (up - down) / (2.0 * delta);
}

}  // namespace svdetect::oracle
