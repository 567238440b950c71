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
#include <span>
#include <vector>

#include "svdetect/lrcn.hpp"

namespace svdetect {

struct TrainConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  /// Stop after this many epochs without a validation improvement; 0 disables.
  std::size_t patience = 0;
  std::size_t workers = 1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_f1 = 0.0;
};

struct TrainResult {
  LrcnParams params;
  std::vector<EpochRecord> history;
  /// Epoch whose parameters were returned (0 = initial parameters).
  std::size_t best_epoch = 0;
};

/// Mini-batch gradient descent with momentum from a seeded initialization.
/// With a validation set the parameters of the best-F1 epoch are returned,
/// otherwise the final ones. Throws NumericError if the loss goes
/// non-finite.
TrainResult train_lrcn(std::span<const FrameBlock> train, std::span<const FrameBlock> valid,
                       const LrcnConfig& model, const TrainConfig& config);

/// Same, continuing from given parameters.
TrainResult train_lrcn(std::span<const FrameBlock> train, std::span<const FrameBlock> valid,
                       LrcnParams initial, const TrainConfig& config);

/// Fraction of blocks classified correctly at 0.5.
double block_accuracy(std::span<const FrameBlock> blocks, const LrcnParams& params);

}  // namespace svdetect
