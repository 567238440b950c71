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

#include "svdetect/lrcn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "lrcn_internal.hpp"
#include "svdetect/error.hpp"

namespace svdetect {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr std::size_t kGradientChunk = 4;

Index ix(std::size_t v) { return static_cast<Index>(v); }

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

VectorXd sigmoid(const VectorXd& a) { return a.unaryExpr([](double v) { return sigmoid(v); }); }

VectorXd tanh_vec(const VectorXd& a) { return a.unaryExpr([](double v) { return std::tanh(v); }); }

void fill_uniform(MatrixXd& m, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
  }
}

double glorot(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

struct StepCache {
  VectorXd z;
  VectorXd h_prev;
  VectorXd c_prev;
  LrcnState state;
  VectorXd tanh_c;
};

struct ForwardCache {
  std::vector<StepCache> steps;
  VectorXd pooled;
  std::vector<Index> pool_source;  // index into h of each pooled max
  std::vector<VectorXd> layer_out;  // layer_out[0] = pooled, then each dense layer
  double logit = 0.0;
  double posterior = 0.5;
};

void check_block(const MatrixXd& block, const LrcnConfig& config) {
  if (static_cast<std::size_t>(block.rows()) != config.block_len) {
    throw UsageError("block has " + std::to_string(block.rows()) + " frames, model expects " +
                     std::to_string(config.block_len));
  }
  if (static_cast<std::size_t>(block.cols()) != config.input_dim) {
    throw UsageError("block has " + std::to_string(block.cols()) + " coefficients, model expects " +
                     std::to_string(config.input_dim));
  }
}

LrcnState step_with_conv(const VectorXd& z, const VectorXd& h_prev, const VectorXd& c_prev,
                         const LrcnParams& p) {
  const Index zd = ix(p.config.conv_dim());
  const Index h = ix(p.config.hidden);
  LrcnState s;
  s.input_gate = sigmoid(p.w_i.leftCols(zd) * z + p.w_i.middleCols(zd, h) * h_prev +
                         p.w_i.rightCols(h) * c_prev + p.b_i);
  s.forget_gate = sigmoid(p.w_f.leftCols(zd) * z + p.w_f.middleCols(zd, h) * h_prev +
                          p.w_f.rightCols(h) * c_prev + p.b_f);
  s.candidate = tanh_vec(p.w_c.leftCols(zd) * z + p.w_c.rightCols(h) * h_prev + p.b_c);
  s.c = s.forget_gate.cwiseProduct(c_prev) + s.input_gate.cwiseProduct(s.candidate);
  s.output_gate = sigmoid(p.w_o.leftCols(zd) * z + p.w_o.middleCols(zd, h) * h_prev +
                          p.w_o.rightCols(h) * s.c + p.b_o);
  s.h = s.output_gate.cwiseProduct(tanh_vec(s.c));
  return s;
}

ForwardCache run_forward(const MatrixXd& block, const LrcnParams& p) {
  const LrcnConfig& cfg = p.config;
  check_block(block, cfg);
  ForwardCache fc;
  fc.steps.reserve(cfg.block_len);
  VectorXd h = VectorXd::Zero(ix(cfg.hidden));
  VectorXd c = VectorXd::Zero(ix(cfg.hidden));
  for (Index t = 0; t < block.rows(); ++t) {
    StepCache sc;
    sc.z = lrcn_convolve(block.row(t).transpose(), p);
    sc.h_prev = h;
    sc.c_prev = c;
    sc.state = step_with_conv(sc.z, h, c, p);
    sc.tanh_c = tanh_vec(sc.state.c);
    h = sc.state.h;
    c = sc.state.c;
    fc.steps.push_back(std::move(sc));
  }

  const std::size_t pooled = cfg.pooled_dim();
  fc.pooled.resize(ix(pooled));
  fc.pool_source.resize(pooled);
  for (std::size_t j = 0; j < pooled; ++j) {
    const std::size_t lo = j * cfg.pool;
    const std::size_t hi = std::min(lo + cfg.pool, cfg.hidden);
    Index best = ix(lo);
    for (std::size_t k = lo + 1; k < hi; ++k) {
      if (h(ix(k)) > h(best)) best = ix(k);
    }
    fc.pooled(ix(j)) = h(best);
    fc.pool_source[j] = best;
  }

  fc.layer_out.push_back(fc.pooled);
  for (std::size_t l = 0; l < p.dense_w.size(); ++l) {
    fc.layer_out.push_back(tanh_vec(p.dense_w[l] * fc.layer_out.back() + p.dense_b[l]));
  }
  fc.logit = p.out_w.dot(fc.layer_out.back()) + p.out_b;
  fc.posterior = sigmoid(fc.logit);
  return fc;
}

// Adds the gradient of one sample's (unscaled) loss into `g`; returns the loss.
double accumulate_sample(const FrameBlock& sample, const LrcnParams& p, LrcnParams& g) {
  const LrcnConfig& cfg = p.config;
  const ForwardCache fc = run_forward(sample.block, p);
  const double y = sample.label ? 1.0 : 0.0;
  const double loss = bce_from_logit(fc.logit, y);

  // Head.
  const double d_logit = fc.posterior - y;
  g.out_w += d_logit * fc.layer_out.back().transpose();
  g.out_b += d_logit;
  VectorXd dy = p.out_w.transpose() * d_logit;
  for (std::size_t l = p.dense_w.size(); l-- > 0;) {
    const VectorXd& out = fc.layer_out[l + 1];
    const VectorXd da = dy.cwiseProduct((1.0 - out.array().square()).matrix());
    g.dense_w[l] += da * fc.layer_out[l].transpose();
    g.dense_b[l] += da;
    dy = p.dense_w[l].transpose() * da;
  }

  const Index zd = ix(cfg.conv_dim());
  const Index hd = ix(cfg.hidden);
  VectorXd dh = VectorXd::Zero(hd);
  for (std::size_t j = 0; j < fc.pool_source.size(); ++j) dh(fc.pool_source[j]) += dy(ix(j));
  VectorXd dc_next = VectorXd::Zero(hd);

  const Index width = ix(cfg.kernel_width);
  const Index dim = ix(cfg.input_dim);
  const Index pad = (width - 1) / 2;

  for (std::size_t t = fc.steps.size(); t-- > 0;) {
    const StepCache& sc = fc.steps[t];
    const LrcnState& s = sc.state;
    const VectorXd& i = s.input_gate;
    const VectorXd& f = s.forget_gate;
    const VectorXd& o = s.output_gate;
    const VectorXd& gc = s.candidate;

    const VectorXd da_o = dh.cwiseProduct(sc.tanh_c).cwiseProduct(o.cwiseProduct((1.0 - o.array()).matrix()));
    VectorXd dc = dc_next +
                  dh.cwiseProduct(o).cwiseProduct((1.0 - sc.tanh_c.array().square()).matrix()) +
                  p.w_o.rightCols(hd).transpose() * da_o;
    g.w_o.leftCols(zd) += da_o * sc.z.transpose();
    g.w_o.middleCols(zd, hd) += da_o * sc.h_prev.transpose();
    g.w_o.rightCols(hd) += da_o * s.c.transpose();
    g.b_o += da_o;

    const VectorXd da_i = dc.cwiseProduct(gc).cwiseProduct(i.cwiseProduct((1.0 - i.array()).matrix()));
    const VectorXd da_f = dc.cwiseProduct(sc.c_prev).cwiseProduct(f.cwiseProduct((1.0 - f.array()).matrix()));
    const VectorXd da_g = dc.cwiseProduct(i).cwiseProduct((1.0 - gc.array().square()).matrix());

    g.w_i.leftCols(zd) += da_i * sc.z.transpose();
    g.w_i.middleCols(zd, hd) += da_i * sc.h_prev.transpose();
    g.w_i.rightCols(hd) += da_i * sc.c_prev.transpose();
    g.b_i += da_i;
    g.w_f.leftCols(zd) += da_f * sc.z.transpose();
    g.w_f.middleCols(zd, hd) += da_f * sc.h_prev.transpose();
    g.w_f.rightCols(hd) += da_f * sc.c_prev.transpose();
    g.b_f += da_f;
    g.w_c.leftCols(zd) += da_g * sc.z.transpose();
    g.w_c.rightCols(hd) += da_g * sc.h_prev.transpose();
    g.b_c += da_g;

    const VectorXd dz = p.w_o.leftCols(zd).transpose() * da_o + p.w_i.leftCols(zd).transpose() * da_i +
                        p.w_f.leftCols(zd).transpose() * da_f + p.w_c.leftCols(zd).transpose() * da_g;
    const VectorXd dh_prev = p.w_o.middleCols(zd, hd).transpose() * da_o +
                             p.w_i.middleCols(zd, hd).transpose() * da_i +
                             p.w_f.middleCols(zd, hd).transpose() * da_f +
                             p.w_c.rightCols(hd).transpose() * da_g;
    dc_next = dc.cwiseProduct(f) + p.w_i.rightCols(hd).transpose() * da_i +
              p.w_f.rightCols(hd).transpose() * da_f;
    dh = dh_prev;

    const auto x = sample.block.row(ix(t));
    for (Index k = 0; k < g.conv.rows(); ++k) {
      for (Index j = 0; j < width; ++j) {
        double acc = 0.0;
        for (Index d = 0; d < dim; ++d) {
          const Index src = d + j - pad;
          if (src >= 0 && src < dim) acc += dz(k * dim + d) * x(src);
        }
        g.conv(k, j) += acc;
      }
    }
  }
  return loss;
}

}  // namespace

// ---- internal helpers shared with training/checkpoint ---------------------

namespace detail {

std::vector<std::span<double>> tensor_spans(LrcnParams& p) {
  std::vector<std::span<double>> out;
  auto add = [&](auto& m) { out.emplace_back(m.data(), static_cast<std::size_t>(m.size())); };
  add(p.conv);
  add(p.w_i);
  add(p.b_i);
  add(p.w_f);
  add(p.b_f);
  add(p.w_c);
  add(p.b_c);
  add(p.w_o);
  add(p.b_o);
  for (std::size_t l = 0; l < p.dense_w.size(); ++l) {
    add(p.dense_w[l]);
    add(p.dense_b[l]);
  }
  add(p.out_w);
  out.emplace_back(&p.out_b, 1);
  return out;
}

std::vector<std::string> tensor_names(const LrcnConfig& config) {
  std::vector<std::string> names = {"conv", "w_i", "b_i", "w_f", "b_f", "w_c", "b_c", "w_o", "b_o"};
  for (std::size_t l = 0; l < config.dense.size(); ++l) {
    names.push_back("dense" + std::to_string(l) + "_w");
    names.push_back("dense" + std::to_string(l) + "_b");
  }
  names.push_back("out_w");
  names.push_back("out_b");
  return names;
}

void add_scaled(LrcnParams& y, double a, const LrcnParams& x) {
  auto ys = tensor_spans(y);
  auto xs = tensor_spans(const_cast<LrcnParams&>(x));
  for (std::size_t t = 0; t < ys.size(); ++t) {
    for (std::size_t k = 0; k < ys[t].size(); ++k) ys[t][k] += a * xs[t][k];
  }
}

void scale(LrcnParams& y, double a) {
  for (auto s : tensor_spans(y)) {
    for (double& v : s) v *= a;
  }
}

}  // namespace detail

// ---- LrcnConfig / LrcnParams ----------------------------------------------

void LrcnConfig::validate() const {
  if (input_dim == 0 || n_filters == 0 || kernel_width == 0 || hidden == 0 || pool == 0 || block_len == 0) {
    throw UsageError("LRCN sizes must all be positive");
  }
  for (std::size_t d : dense) {
    if (d == 0) throw UsageError("dense layer widths must be positive");
  }
}

LrcnParams LrcnParams::zeros(const LrcnConfig& config) {
  config.validate();
  const Index zd = ix(config.conv_dim());
  const Index h = ix(config.hidden);
  LrcnParams p;
  p.config = config;
  p.conv = MatrixXd::Zero(ix(config.n_filters), ix(config.kernel_width));
  p.w_i = MatrixXd::Zero(h, zd + 2 * h);
  p.w_f = MatrixXd::Zero(h, zd + 2 * h);
  p.w_o = MatrixXd::Zero(h, zd + 2 * h);
  p.w_c = MatrixXd::Zero(h, zd + h);
  p.b_i = p.b_f = p.b_c = p.b_o = VectorXd::Zero(h);
  std::size_t in = config.pooled_dim();
  for (std::size_t width : config.dense) {
    p.dense_w.push_back(MatrixXd::Zero(ix(width), ix(in)));
    p.dense_b.push_back(VectorXd::Zero(ix(width)));
    in = width;
  }
  p.out_w = Eigen::RowVectorXd::Zero(ix(in));
  p.out_b = 0.0;
  return p;
}

LrcnParams LrcnParams::random(const LrcnConfig& config, std::uint64_t seed) {
  LrcnParams p = zeros(config);
  std::mt19937_64 rng(seed);
  fill_uniform(p.conv, std::sqrt(3.0 / static_cast<double>(config.kernel_width)), rng);
  const std::size_t h = config.hidden;
  fill_uniform(p.w_i, glorot(static_cast<std::size_t>(p.w_i.cols()), h), rng);
  fill_uniform(p.w_f, glorot(static_cast<std::size_t>(p.w_f.cols()), h), rng);
  fill_uniform(p.w_c, glorot(static_cast<std::size_t>(p.w_c.cols()), h), rng);
  fill_uniform(p.w_o, glorot(static_cast<std::size_t>(p.w_o.cols()), h), rng);
  p.b_f.setOnes();
  for (auto& w : p.dense_w) {
    fill_uniform(w, glorot(static_cast<std::size_t>(w.cols()), static_cast<std::size_t>(w.rows())), rng);
  }
  MatrixXd out(1, p.out_w.size());
  fill_uniform(out, glorot(static_cast<std::size_t>(p.out_w.size()), 1), rng);
  p.out_w = out.row(0);
  return p;
}

std::size_t LrcnParams::parameter_count() const {
  std::size_t n = 0;
  for (auto s : detail::tensor_spans(const_cast<LrcnParams&>(*this))) n += s.size();
  return n;
}

void LrcnParams::for_each_tensor(const std::function<void(const std::string&, std::span<double>)>& fn) {
  const auto names = detail::tensor_names(config);
  const auto spans = detail::tensor_spans(*this);
  for (std::size_t t = 0; t < spans.size(); ++t) fn(names[t], spans[t]);
}

void LrcnParams::for_each_tensor(
    const std::function<void(const std::string&, std::span<const double>)>& fn) const {
  const auto names = detail::tensor_names(config);
  const auto spans = detail::tensor_spans(const_cast<LrcnParams&>(*this));
  for (std::size_t t = 0; t < spans.size(); ++t) fn(names[t], spans[t]);
}

std::vector<double> LrcnParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (auto s : detail::tensor_spans(const_cast<LrcnParams&>(*this))) out.insert(out.end(), s.begin(), s.end());
  return out;
}

void LrcnParams::unflatten(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw UsageError("parameter vector has " + std::to_string(values.size()) + " values, model needs " +
                     std::to_string(parameter_count()));
  }
  std::size_t at = 0;
  for (auto s : detail::tensor_spans(*this)) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(at), s.size(), s.begin());
    at += s.size();
  }
}

void LrcnParams::validate() const {
  config.validate();
  const LrcnParams shape = zeros(config);
  const auto expect = detail::tensor_spans(const_cast<LrcnParams&>(shape));
  const auto have = detail::tensor_spans(const_cast<LrcnParams&>(*this));
  const auto names = detail::tensor_names(config);
  if (expect.size() != have.size()) throw DataError("LRCN parameter set has the wrong number of tensors");
  for (std::size_t t = 0; t < have.size(); ++t) {
    if (have[t].size() != expect[t].size()) throw DataError("LRCN tensor '" + names[t] + "' has the wrong size");
    for (double v : have[t]) {
      if (!std::isfinite(v)) throw NumericError("LRCN tensor '" + names[t] + "' contains non-finite values");
    }
  }
}

// ---- Forward / backward ------------------------------------------------------

double bce_from_logit(double logit, double label) {
  // log(1 + e^s) - y s, computed without overflow.
  return std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit))) - label * logit;
}

VectorXd lrcn_convolve(const VectorXd& x, const LrcnParams& params) {
  const LrcnConfig& cfg = params.config;
  if (static_cast<std::size_t>(x.size()) != cfg.input_dim) {
    throw UsageError("frame has " + std::to_string(x.size()) + " coefficients, model expects " +
                     std::to_string(cfg.input_dim));
  }
  const Index dim = ix(cfg.input_dim);
  const Index width = ix(cfg.kernel_width);
  const Index pad = (width - 1) / 2;
  VectorXd z(ix(cfg.conv_dim()));
  for (Index k = 0; k < params.conv.rows(); ++k) {
    for (Index d = 0; d < dim; ++d) {
      double acc = 0.0;
      for (Index j = 0; j < width; ++j) {
        const Index src = d + j - pad;
        if (src >= 0 && src < dim) acc += params.conv(k, j) * x(src);
      }
      z(k * dim + d) = acc;
    }
  }
  return z;
}

LrcnState lrcn_cell_step(const VectorXd& x, const VectorXd& h_prev, const VectorXd& c_prev,
                         const LrcnParams& params) {
  const auto h = static_cast<Index>(params.config.hidden);
  if (h_prev.size() != h || c_prev.size() != h) {
    throw UsageError("state size does not match hidden size " + std::to_string(h));
  }
  return step_with_conv(lrcn_convolve(x, params), h_prev, c_prev, params);
}

std::vector<LrcnState> lrcn_unroll(const MatrixXd& block, const LrcnParams& params) {
  const ForwardCache fc = run_forward(block, params);
  std::vector<LrcnState> out;
  out.reserve(fc.steps.size());
  for (const auto& s : fc.steps) out.push_back(s.state);
  return out;
}

double lrcn_forward_block(const MatrixXd& block, const LrcnParams& params) {
  return run_forward(block, params).posterior;
}

LrcnGradient lrcn_backward(std::span<const FrameBlock> batch, const LrcnParams& params, std::size_t workers) {
  if (batch.empty()) throw UsageError("lrcn_backward needs a non-empty batch");
  for (const auto& b : batch) {
    if (b.label > 1) throw DataError("block labels must be 0 or 1");
  }
  const std::size_t n_chunks = (batch.size() + kGradientChunk - 1) / kGradientChunk;
  std::vector<LrcnParams> chunk_grads(n_chunks);
  std::vector<double> losses(batch.size(), 0.0);

  auto run_chunk = [&](std::size_t c) {
    LrcnParams g = LrcnParams::zeros(params.config);
    const std::size_t lo = c * kGradientChunk;
    const std::size_t hi = std::min(lo + kGradientChunk, batch.size());
    for (std::size_t s = lo; s < hi; ++s) losses[s] = accumulate_sample(batch[s], params, g);
    chunk_grads[c] = std::move(g);
  };

  workers = std::clamp<std::size_t>(workers, 1, n_chunks);
  if (workers == 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < n_chunks; c += workers) run_chunk(c);
      });
    }
  }

  LrcnGradient out;
  out.grads = std::move(chunk_grads[0]);
  for (std::size_t c = 1; c < n_chunks; ++c) detail::add_scaled(out.grads, 1.0, chunk_grads[c]);
  const double inv = 1.0 / static_cast<double>(batch.size());
  detail::scale(out.grads, inv);
  double total = 0.0;
  for (double l : losses) total += l;
  out.loss = total * inv;
  out.sample_losses = std::move(losses);
  return out;
}

PredictionTrack predict_track(const FeatureMatrix& feat, const LrcnParams& params) {
  if (feat.n_frames() == 0) throw DataError("cannot predict on an empty feature matrix");
  if (feat.dim() != params.config.input_dim) {
    throw DataError("features have " + std::to_string(feat.dim()) + " columns, model expects " +
                    std::to_string(params.config.input_dim));
  }
  BlockOptions opts;
  opts.block_len = params.config.block_len;
  opts.stride = 1;
  opts.replicate_edges = true;
  const auto blocks = blockify(feat, nullptr, opts);

  PredictionTrack track;
  track.grid = feat.grid;
  track.posteriors.resize(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    track.posteriors[blocks[i].center_frame_index] = lrcn_forward_block(blocks[i].block, params);
  }
  return track;
}

}  // namespace svdetect
