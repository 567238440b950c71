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

#include <random>

#include <doctest.h>

#include "svdetect/error.hpp"
#include "svdetect/training.hpp"

using namespace svdetect;

namespace {

LrcnConfig small_config() {
  LrcnConfig c;
  c.input_dim = 4;
  c.n_filters = 2;
  c.hidden = 4;
  c.dense = {4};
  c.block_len = 5;
  return c;
}

// Class 1 blocks sit around 0.8, class 0 around 0.2.
std::vector<FrameBlock> separable_blocks(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  std::vector<FrameBlock> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].label = static_cast<std::uint8_t>(i % 2);
    out[i].block.resize(5, 4);
    for (Eigen::Index k = 0; k < out[i].block.size(); ++k) {
      out[i].block.data()[k] = (out[i].label ? 0.8 : 0.2) + noise(rng);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("zero learning rate keeps the initial parameters") {
  const auto blocks = separable_blocks(8, 1);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 5;
  cfg.batch_size = 4;
  const auto init = LrcnParams::random(small_config(), 9);
  const auto r = train_lrcn(blocks, {}, init, cfg);
  REQUIRE(r.history.size() == 5);
  for (const auto& e : r.history) CHECK(e.train_loss == r.history.front().train_loss);
  CHECK(r.params.flatten() == init.flatten());
}

TEST_CASE("separable blocks are learned exactly") {
  const auto blocks = separable_blocks(8, 2);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 200;
  cfg.batch_size = 4;
  const auto r = train_lrcn(blocks, {}, small_config(), cfg);
  CHECK(block_accuracy(blocks, r.params) == 1.0);
  CHECK(r.history.back().train_loss < r.history.front().train_loss);
}

TEST_CASE("training is deterministic for a seed and worker count") {
  const auto blocks = separable_blocks(12, 3);
  const auto valid = separable_blocks(6, 4);
  TrainConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.epochs = 6;
  cfg.batch_size = 4;
  cfg.seed = 7;
  const auto a = train_lrcn(blocks, valid, small_config(), cfg);
  cfg.workers = 2;
  const auto b = train_lrcn(blocks, valid, small_config(), cfg);
  CHECK(a.params.flatten() == b.params.flatten());
  CHECK(a.best_epoch == b.best_epoch);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].train_loss == b.history[i].train_loss);
}

TEST_CASE("training argument checks") {
  TrainConfig cfg;
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = {};
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  CHECK_THROWS_AS(train_lrcn({}, {}, small_config(), TrainConfig{}), DataError);
}

TEST_CASE("diverging training is a numeric error") {
  const auto blocks = separable_blocks(8, 5);
  TrainConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.epochs = 5;
  cfg.batch_size = 4;
  CHECK_THROWS_AS(train_lrcn(blocks, {}, small_config(), cfg), NumericError);
}
