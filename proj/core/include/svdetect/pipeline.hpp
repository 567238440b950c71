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
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "svdetect/audio.hpp"
#include "svdetect/checkpoint.hpp"
#include "svdetect/evaluation.hpp"
#include "svdetect/features.hpp"
#include "svdetect/lrcn.hpp"
#include "svdetect/separation.hpp"
#include "svdetect/smoothing.hpp"
#include "svdetect/training.hpp"

namespace svdetect {

/// Every tunable of a run. Each field is reachable through a dotted
/// key (see keys()), which backs the key=value config file and the CLI.
struct PipelineConfig {
  bool separation = true;
  std::string feature_set = "mfcc";
  int sample_rate = kDefaultSampleRate;
  double frame_ms = kDefaultFrameMs;
  double hop_ms = kDefaultHopMs;
  std::size_t n_fft = kDefaultFftSize;

  SeparationOptions repet;
  FeatureOptions features;
  BlockOptions blocks;
  LrcnConfig model;
  TrainConfig train;
  SmoothingConfig smoothing;

  std::size_t folds = 5;
  /// Share of training files held out for model selection.
  double valid_fraction = 0.2;
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  struct Key {
    std::string name;
    std::string help;
    std::function<std::string(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, const std::string&)> set;
  };
  static const std::vector<Key>& keys();

  /// Throws UsageError for unknown keys or unparseable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  /// All keys in table order with their resolved values.
  std::vector<std::pair<std::string, std::string>> entries() const;
  /// Parses "key = value" lines; '#' starts a comment.
  void load_file(const std::filesystem::path& path);
  void validate() const;
};

struct DatasetItem {
  std::string id;
  std::filesystem::path audio;
  std::filesystem::path labels;
};

/// Lines "audio_path label_path"; relative paths resolve against the list
/// file's directory. Ids are audio file stems and must be unique.
std::vector<DatasetItem> read_dataset_list(const std::filesystem::path& path);

/// Resamples to the configured rate and, when enabled, keeps only the
/// separated vocal estimate.
AudioClip prepare_clip(const AudioClip& raw, const PipelineConfig& config);

FrameGrid analysis_grid(const AudioClip& clip, const PipelineConfig& config);

/// Raw (unnormalized) features of an already prepared clip.
FeatureMatrix compute_features(const AudioClip& clip, const PipelineConfig& config);

struct ClipData {
  std::string id;
  FeatureMatrix features;  // raw
  LabelTrack labels;
};

ClipData load_clip(const DatasetItem& item, const PipelineConfig& config);

/// Loads items with up to config.workers threads; output order matches input.
std::vector<ClipData> load_clips(std::span<const DatasetItem> items, const PipelineConfig& config);

struct TrainedModel {
  Checkpoint checkpoint;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

/// Holds out a seeded file-level validation split, fits min-max stats on
/// the rest, trains the LRCN and, for HMM smoothing, fits the HMM on the
/// training posteriors.
TrainedModel train_model(std::span<const ClipData> clips, const PipelineConfig& config);

struct ClipPrediction {
  PredictionTrack posterior;
  LabelTrack smoothed;
};

ClipPrediction predict_clip(const Checkpoint& model, const FeatureMatrix& raw_features,
                            const PipelineConfig& config);

/// Posterior CSV with columns frame_time, posterior, smoothed_label.
void write_posterior_csv(const std::filesystem::path& path, const ClipPrediction& prediction);

/// File-level k-fold cross-validation; every file is scored once while held out.
EvalReport cross_validate(std::span<const ClipData> clips, const PipelineConfig& config);

}  // namespace svdetect
