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
#include <vector>

#include "svdetect/audio.hpp"

namespace svdetect {

/// Per-frame vocal posteriors in [0, 1].
struct PredictionTrack {
  std::vector<double> posteriors;
  FrameGrid grid;
  double threshold = 0.5;

  std::size_t size() const { return posteriors.size(); }
};

/// Per-frame binary labels, 1 = vocal.
struct LabelTrack {
  std::vector<std::uint8_t> labels;
  FrameGrid grid;

  std::size_t size() const { return labels.size(); }
};

/// Posterior >= threshold maps to 1.
LabelTrack threshold_track(const PredictionTrack& track);

}  // namespace svdetect
