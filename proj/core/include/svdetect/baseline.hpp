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

#include <Eigen/Dense>

#include "svdetect/features.hpp"

namespace svdetect {

struct LinearBaselineConfig {
  double learning_rate = 1.0;
  std::size_t epochs = 2000;
  double l2 = 0.0;
};

/// Per-frame logistic-loss linear classifier on min-max normalized
/// features, trained by full-batch gradient descent. Stands in for a
/// linear-kernel SVM.
class LinearBaseline {
 public:
  LinearBaseline() = default;
  LinearBaseline(Eigen::VectorXd weights, double bias, NormStats stats);

  /// Zero weights over `dim` features; predicts 0.5 everywhere.
  static LinearBaseline zeros(std::size_t dim);

  /// Fits normalization on `frames` then trains. Throws DataError when
  /// only one class is present or shapes disagree.
  static LinearBaseline fit(const Eigen::MatrixXd& frames, std::span<const std::uint8_t> labels,
                            const LinearBaselineConfig& config = {});

  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& frames) const;
  std::vector<std::uint8_t> predict(const Eigen::MatrixXd& frames) const;

  const Eigen::VectorXd& weights() const { return weights_; }
  double bias() const { return bias_; }
  const NormStats& stats() const { return stats_; }

 private:
  Eigen::VectorXd weights_;
  double bias_ = 0.0;
  NormStats stats_;
};

}  // namespace svdetect
