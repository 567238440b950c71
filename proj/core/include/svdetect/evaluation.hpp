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
#include <iosfwd>
#include <string>
#include <vector>

#include "svdetect/tracks.hpp"

namespace svdetect {

/// Reads "start end label" lines (seconds; label sing/nosing or 1/0).
/// A frame is vocal iff its centre lies in [start, end) of a sing segment.
/// Blank lines and lines starting with '#' are skipped. Throws DataError
/// on unparseable lines (with line number), reversed segments and overlaps.
LabelTrack load_labels(const std::filesystem::path& path, const FrameGrid& grid);
LabelTrack parse_labels(std::istream& in, const FrameGrid& grid, const std::string& source = "<stream>");

/// Writes runs of equal labels as segments whose bounds sit half a hop
/// either side of the frame centres; load_labels on the same grid gives
/// the track back.
void write_labels(const std::filesystem::path& path, const LabelTrack& track);
void write_labels(std::ostream& out, const LabelTrack& track);

/// Positive class = vocal.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion_counts(const LabelTrack& pred, const LabelTrack& truth);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // A zero denominator sets the metric to 0 and raises its flag.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

/// Harmonic mean; 0 when precision + recall is 0.
double f_measure(double precision, double recall);

/// Throws DataError for zero total frames.
Metrics metrics(const ConfusionCounts& counts);

struct FileReport {
  std::string id;
  ConfusionCounts counts;
  Metrics metrics;
};

struct EvalReport {
  ConfusionCounts counts;  // pooled over all files
  Metrics pooled;
  Metrics file_mean;       // unweighted mean of per-file metrics
  std::vector<FileReport> files;
};

/// Pools frame counts across files (micro) and also averages per-file
/// metrics (macro).
EvalReport build_report(std::vector<FileReport> files);
FileReport file_report(std::string id, const LabelTrack& pred, const LabelTrack& truth);

std::string report_to_json(const EvalReport& report);
void write_report(const std::filesystem::path& path, const EvalReport& report);

/// Deterministic shuffled partition into k folds whose sizes differ by at
/// most one. Throws UsageError when there are fewer items than folds.
std::vector<std::vector<std::string>> kfold_split(const std::vector<std::string>& items, std::size_t k,
                                                  std::uint64_t seed);

}  // namespace svdetect
