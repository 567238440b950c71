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

// Convolutional LSTM classifier over fixed-length frame blocks.
//
// Each timestep convolves the frame's feature vector with a bank of 1-D
// kernels ("same" padding, so every kernel yields one value per
// coefficient), then runs the gated cell
//
//   i = sigmoid(W_i [z, h_prev, c_prev] + b_i)
//   f = sigmoid(W_f [z, h_prev, c_prev] + b_f)
//   c = f * c_prev + i * tanh(W_c [z, h_prev] + b_c)
//   o = sigmoid(W_o [z, h_prev, c] + b_o)      <- sees the updated cell
//   h = o * tanh(c)
//
// where z is the flattened convolution output shared by all four gates.
// The last hidden state goes through max-pooling, a stack of tanh dense
// layers and a single sigmoid unit.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "svdetect/features.hpp"
#include "svdetect/tracks.hpp"

namespace svdetect {

struct LrcnConfig {
  std::size_t input_dim = kCoefficientCount;
  std::size_t n_filters = 256;
  std::size_t kernel_width = 4;
  std::size_t hidden = 32;
  std::size_t pool = 2;
  std::vector<std::size_t> dense = {64};
  std::size_t block_len = kBlockLength;

  std::size_t conv_dim() const { return n_filters * input_dim; }
  std::size_t pooled_dim() const { return (hidden + pool - 1) / pool; }
  /// Throws UsageError on zero sizes.
  void validate() const;

  bool operator==(const LrcnConfig&) const = default;
};

struct LrcnParams {
  LrcnConfig config;
  Eigen::MatrixXd conv;  // n_filters x kernel_width
  Eigen::MatrixXd w_i, w_f, w_o;  // hidden x (conv_dim + 2 hidden)
  Eigen::MatrixXd w_c;            // hidden x (conv_dim + hidden)
  Eigen::VectorXd b_i, b_f, b_c, b_o;
  std::vector<Eigen::MatrixXd> dense_w;
  std::vector<Eigen::VectorXd> dense_b;
  Eigen::RowVectorXd out_w;
  double out_b = 0.0;

  /// All parameters zero.
  static LrcnParams zeros(const LrcnConfig& config);
  /// Glorot-uniform weights, zero biases except forget bias 1.
  static LrcnParams random(const LrcnConfig& config, std::uint64_t seed);

  std::size_t parameter_count() const;

  /// Visits every tensor in a fixed order as (name, contiguous data).
  void for_each_tensor(const std::function<void(const std::string&, std::span<double>)>& fn);
  void for_each_tensor(const std::function<void(const std::string&, std::span<const double>)>& fn) const;

  std::vector<double> flatten() const;
  /// Throws UsageError when the size does not match.
  void unflatten(std::span<const double> values);

  /// Checks tensor shapes against the config and that all values are finite.
  void validate() const;
};

/// One step of the cell plus the gate activations kept for backprop.
struct LrcnState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
  Eigen::VectorXd input_gate;
  Eigen::VectorXd forget_gate;
  Eigen::VectorXd output_gate;
  Eigen::VectorXd candidate;  // tanh(W_c [z, h_prev] + b_c)
};

/// conv(x): n_filters * input_dim values, kernel k's outputs contiguous.
Eigen::VectorXd lrcn_convolve(const Eigen::VectorXd& x, const LrcnParams& params);

LrcnState lrcn_cell_step(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                         const Eigen::VectorXd& c_prev, const LrcnParams& params);

/// Runs all cell steps over the block's rows from zero state.
std::vector<LrcnState> lrcn_unroll(const Eigen::MatrixXd& block, const LrcnParams& params);

/// Posterior in (0, 1) for one block. Throws UsageError on a block whose
/// length or width disagrees with the config.
double lrcn_forward_block(const Eigen::MatrixXd& block, const LrcnParams& params);

struct LrcnGradient {
  double loss = 0.0;  // mean binary cross-entropy
  std::vector<double> sample_losses;
  LrcnParams grads;
};

/// Mean BCE over the batch and its exact gradient by backpropagation
/// through time. Samples are reduced in fixed chunks so the result does
/// not depend on `workers`.
LrcnGradient lrcn_backward(std::span<const FrameBlock> batch, const LrcnParams& params,
                           std::size_t workers = 1);

/// One posterior per frame, from a block centred on that frame with edge
/// replication.
PredictionTrack predict_track(const FeatureMatrix& feat, const LrcnParams& params);

/// Numerically stable BCE of a logit.
double bce_from_logit(double logit, double label);

}  // namespace svdetect
