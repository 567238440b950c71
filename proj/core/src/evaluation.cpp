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

#include "svdetect/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

#include "svdetect/error.hpp"

namespace svdetect {
namespace {

struct Segment {
  double start;
  double end;
  bool sing;
};

bool parse_label_word(const std::string& word, bool& sing) {
  if (word == "sing" || word == "1") {
    sing = true;
    return true;
  }
  if (word == "nosing" || word == "0") {
    sing = false;
    return true;
  }
  return false;
}

nlohmann::ordered_json counts_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}, {"total", c.total()}};
}

nlohmann::ordered_json metrics_json(const Metrics& m) {
  nlohmann::ordered_json j = {
      {"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  nlohmann::ordered_json flags = nlohmann::ordered_json::array();
  if (m.precision_undefined) flags.push_back("precision_undefined");
  if (m.recall_undefined) flags.push_back("recall_undefined");
  if (m.f1_undefined) flags.push_back("f1_undefined");
  j["flags"] = flags;
  return j;
}

}  // namespace

LabelTrack threshold_track(const PredictionTrack& track) {
  LabelTrack out;
  out.grid = track.grid;
  out.labels.resize(track.size());
  for (std::size_t i = 0; i < track.size(); ++i) {
    out.labels[i] = track.posteriors[i] >= track.threshold ? 1 : 0;
  }
  return out;
}

LabelTrack parse_labels(std::istream& in, const FrameGrid& grid, const std::string& source) {
  std::vector<Segment> segments;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    Segment seg{};
    std::string word, extra;
    if (!(fields >> seg.start >> seg.end >> word) || (fields >> extra) || !parse_label_word(word, seg.sing) ||
        !std::isfinite(seg.start) || !std::isfinite(seg.end)) {
      throw DataError(source + ":" + std::to_string(line_no) + ": unparseable label line '" + line + "'");
    }
    if (seg.end < seg.start) {
      throw DataError(source + ":" + std::to_string(line_no) + ": non-monotone segment (end before start)");
    }
    if (!segments.empty()) {
      if (seg.start < segments.back().start) {
        throw DataError(source + ":" + std::to_string(line_no) + ": non-monotone segment (starts before previous)");
      }
      if (seg.start < segments.back().end) {
        throw DataError(source + ":" + std::to_string(line_no) + ": overlapping segments");
      }
    }
    segments.push_back(seg);
  }

  LabelTrack track;
  track.grid = grid;
  track.labels.assign(grid.n_frames, 0);
  std::size_t s = 0;
  for (std::size_t i = 0; i < grid.n_frames; ++i) {
    const double t = grid.center_seconds(i);
    while (s < segments.size() && segments[s].end <= t) ++s;
    if (s < segments.size() && segments[s].start <= t && t < segments[s].end && segments[s].sing) {
      track.labels[i] = 1;
    }
  }
  return track;
}

LabelTrack load_labels(const std::filesystem::path& path, const FrameGrid& grid) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file: " + path.string());
  return parse_labels(in, grid, path.string());
}

void write_labels(std::ostream& out, const LabelTrack& track) {
  const FrameGrid& g = track.grid;
  // Boundary i sits half a hop before the centre of frame i.
  const auto boundary = [&g](std::size_t i) {
    return (static_cast<double>(i * g.hop) + 0.5 * static_cast<double>(g.frame_len) -
            0.5 * static_cast<double>(g.hop)) / g.sample_rate;
  };
  out << std::fixed << std::setprecision(6);
  std::size_t start = 0;
  while (start < track.size()) {
    std::size_t end = start;
    while (end < track.size() && track.labels[end] == track.labels[start]) ++end;
    const double t0 = start == 0 ? 0.0 : boundary(start);
    const double t1 = boundary(end);
    out << t0 << ' ' << t1 << ' ' << (track.labels[start] ? "sing" : "nosing") << '\n';
    start = end;
  }
}

void write_labels(const std::filesystem::path& path, const LabelTrack& track) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write label file: " + path.string());
  write_labels(out, track);
}

ConfusionCounts confusion_counts(const LabelTrack& pred, const LabelTrack& truth) {
  if (pred.size() != truth.size()) {
    throw DataError("prediction has " + std::to_string(pred.size()) + " frames, ground truth has " +
                    std::to_string(truth.size()));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.labels[i] != 0;
    const bool t = truth.labels[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f_measure(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

Metrics metrics(const ConfusionCounts& counts) {
  if (counts.total() == 0) throw DataError("cannot compute metrics over zero frames");
  Metrics m;
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  m.accuracy = d(counts.tp + counts.tn) / d(counts.total());
  if (counts.tp + counts.fp > 0) {
    m.precision = d(counts.tp) / d(counts.tp + counts.fp);
  } else {
    m.precision_undefined = true;
  }
  if (counts.tp + counts.fn > 0) {
    m.recall = d(counts.tp) / d(counts.tp + counts.fn);
  } else {
    m.recall_undefined = true;
  }
  m.f1 = f_measure(m.precision, m.recall);
  m.f1_undefined = m.precision + m.recall == 0.0;
  return m;
}

FileReport file_report(std::string id, const LabelTrack& pred, const LabelTrack& truth) {
  FileReport r;
  r.id = std::move(id);
  r.counts = confusion_counts(pred, truth);
  r.metrics = metrics(r.counts);
  return r;
}

EvalReport build_report(std::vector<FileReport> files) {
  if (files.empty()) throw DataError("evaluation report needs at least one file");
  EvalReport report;
  for (const auto& f : files) report.counts += f.counts;
  report.pooled = metrics(report.counts);
  const double n = static_cast<double>(files.size());
  for (const auto& f : files) {
    report.file_mean.accuracy += f.metrics.accuracy / n;
    report.file_mean.precision += f.metrics.precision / n;
    report.file_mean.recall += f.metrics.recall / n;
    report.file_mean.f1 += f.metrics.f1 / n;
    report.file_mean.precision_undefined |= f.metrics.precision_undefined;
    report.file_mean.recall_undefined |= f.metrics.recall_undefined;
    report.file_mean.f1_undefined |= f.metrics.f1_undefined;
  }
  report.files = std::move(files);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["counts"] = counts_json(report.counts);
  j["pooled"] = metrics_json(report.pooled);
  j["file_mean"] = metrics_json(report.file_mean);
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& f : report.files) {
    nlohmann::ordered_json e;
    e["id"] = f.id;
    e["counts"] = counts_json(f.counts);
    e["metrics"] = metrics_json(f.metrics);
    files.push_back(std::move(e));
  }
  j["files"] = std::move(files);
  return j.dump(2) + "\n";
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path.string());
  out << report_to_json(report);
}

std::vector<std::vector<std::string>> kfold_split(const std::vector<std::string>& items, std::size_t k,
                                                  std::uint64_t seed) {
  if (k == 0) throw UsageError("fold count must be positive");
  if (items.size() < k) {
    throw UsageError("cannot split " + std::to_string(items.size()) + " items into " + std::to_string(k) +
                     " folds");
  }
  std::vector<std::string> shuffled = items;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  std::vector<std::vector<std::string>> folds(k);
  const std::size_t base = items.size() / k;
  const std::size_t extra = items.size() % k;
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(shuffled.begin() + static_cast<std::ptrdiff_t>(at),
                    shuffled.begin() + static_cast<std::ptrdiff_t>(at + size));
    at += size;
  }
  return folds;
}

}  // namespace svdetect
