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

#include "svdetect/baseline.hpp"

#include <cmath>

#include "svdetect/error.hpp"

namespace svdetect {
namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) {
  return z.unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

}  // namespace

LinearBaseline::LinearBaseline(Eigen::VectorXd weights, double bias, NormStats stats)
    : weights_(std::move(weights)), bias_(bias), stats_(std::move(stats)) {
  if (stats_.min.size() != weights_.size() || stats_.max.size() != weights_.size()) {
    throw UsageError("baseline weights and normalization stats differ in size");
  }
}

LinearBaseline LinearBaseline::zeros(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return LinearBaseline(Eigen::VectorXd::Zero(n), 0.0, NormStats{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)});
}

LinearBaseline LinearBaseline::fit(const Eigen::MatrixXd& frames, std::span<const std::uint8_t> labels,
                                   const LinearBaselineConfig& config) {
  if (static_cast<std::size_t>(frames.rows()) != labels.size()) {
    throw DataError("baseline needs one label per frame");
  }
  Eigen::VectorXd y(frames.rows());
  std::size_t positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = labels[i] ? 1.0 : 0.0;
    positives += labels[i] ? 1 : 0;
  }
  if (positives == 0 || positives == labels.size()) {
    throw DataError("baseline training data has a single class");
  }

  NormStats stats = fit_norm_stats(frames);
  const Eigen::MatrixXd x = apply_norm(frames, stats);
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
  double b = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const Eigen::VectorXd residual = sigmoid(((x * w).array() + b).matrix()) - y;
    const Eigen::VectorXd grad_w = x.transpose() * residual / n + config.l2 * w;
    const double grad_b = residual.sum() / n;
    w -= config.learning_rate * grad_w;
    b -= config.learning_rate * grad_b;
  }
  if (!w.allFinite() || !std::isfinite(b)) throw NumericError("baseline training diverged");
  return LinearBaseline(std::move(w), b, std::move(stats));
}

Eigen::VectorXd LinearBaseline::predict_proba(const Eigen::MatrixXd& frames) const {
  if (frames.cols() != weights_.size()) {
    throw DataError("baseline expects " + std::to_string(weights_.size()) + " features, got " +
                    std::to_string(frames.cols()));
  }
  return sigmoid(((apply_norm(frames, stats_) * weights_).array() + bias_).matrix());
}

std::vector<std::uint8_t> LinearBaseline::predict(const Eigen::MatrixXd& frames) const {
  const Eigen::VectorXd p = predict_proba(frames);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p(i) >= 0.5 ? 1 : 0;
  return out;
}

}  // namespace svdetect
