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

#include "svdetect/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lrcn_internal.hpp"
#include "svdetect/error.hpp"

namespace svdetect {
namespace {

double block_f1(std::span<const FrameBlock> blocks, const LrcnParams& params) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& b : blocks) {
    const bool predicted = lrcn_forward_block(b.block, params) >= 0.5;
    const bool truth = b.label != 0;
    tp += predicted && truth;
    fp += predicted && !truth;
    fn += !predicted && truth;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw UsageError("learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw UsageError("momentum must lie in [0, 1)");
  if (batch_size == 0) throw UsageError("batch size must be positive");
  if (workers == 0) throw UsageError("worker count must be positive");
}

double block_accuracy(std::span<const FrameBlock> blocks, const LrcnParams& params) {
  if (blocks.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& b : blocks) {
    const bool predicted = lrcn_forward_block(b.block, params) >= 0.5;
    correct += predicted == (b.label != 0);
  }
  return static_cast<double>(correct) / static_cast<double>(blocks.size());
}

TrainResult train_lrcn(std::span<const FrameBlock> train, std::span<const FrameBlock> valid,
                       const LrcnConfig& model, const TrainConfig& config) {
  return train_lrcn(train, valid, LrcnParams::random(model, config.seed), config);
}

TrainResult train_lrcn(std::span<const FrameBlock> train, std::span<const FrameBlock> valid,
                       LrcnParams initial, const TrainConfig& config) {
  config.validate();
  initial.validate();
  if (train.empty()) throw DataError("training set is empty");

  // Separate stream from the initializer so both are fixed by one seed.
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  LrcnParams params = std::move(initial);
  LrcnParams velocity = LrcnParams::zeros(params.config);

  TrainResult result;
  const bool use_valid = !valid.empty();
  double best_f1 = use_valid ? block_f1(valid, params) : 0.0;
  result.params = params;
  result.best_epoch = 0;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<FrameBlock> batch;
  std::vector<double> sample_loss(train.size(), 0.0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, order.size());
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(train[order[k]]);
      const LrcnGradient grad = lrcn_backward(batch, params, config.workers);
      if (!std::isfinite(grad.loss)) {
        throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
      }
      // Summed in sample-index order so the epoch loss does not depend on
      // the shuffle.
      for (std::size_t k = start; k < end; ++k) sample_loss[order[k]] = grad.sample_losses[k - start];

      detail::scale(velocity, config.momentum);
      detail::add_scaled(velocity, -config.learning_rate, grad.grads);
      detail::add_scaled(params, 1.0, velocity);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    double total = 0.0;
    for (double l : sample_loss) total += l;
    rec.train_loss = total / static_cast<double>(train.size());
    if (!std::isfinite(rec.train_loss)) {
      throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
    }
    rec.valid_f1 = use_valid ? block_f1(valid, params) : 0.0;
    result.history.push_back(rec);

    if (use_valid) {
      if (rec.valid_f1 > best_f1) {
        best_f1 = rec.valid_f1;
        result.params = params;
        result.best_epoch = epoch;
        since_best = 0;
      } else if (config.patience > 0 && ++since_best >= config.patience) {
        break;
      }
    } else {
      result.params = params;
      result.best_epoch = epoch;
    }
  }

  result.params.validate();
  return result;
}

}  // namespace svdetect
