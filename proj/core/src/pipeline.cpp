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

#include "svdetect/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "svdetect/error.hpp"

namespace svdetect {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw UsageError("bad value '" + text + "' for " + key);
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw UsageError("non-finite value for " + key);
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "on" || text == "true" || text == "1" || text == "yes") return true;
  if (text == "off" || text == "false" || text == "0" || text == "no") return false;
  throw UsageError("bad boolean '" + text + "' for " + key);
}

using Key = PipelineConfig::Key;

template <class T, class Access>
Key field(std::string name, std::string help, Access access) {
  Key k;
  k.name = name;
  k.help = std::move(help);
  k.get = [access](const PipelineConfig& c) -> std::string {
    const T& v = access(const_cast<PipelineConfig&>(c));
    if constexpr (std::is_same_v<T, bool>) {
      return v ? "on" : "off";
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_floating_point_v<T>) {
      return format_double(v);
    } else {
      return std::to_string(v);
    }
  };
  k.set = [access, name](PipelineConfig& c, const std::string& text) {
    T& v = access(c);
    if constexpr (std::is_same_v<T, bool>) {
      v = parse_bool(name, text);
    } else if constexpr (std::is_same_v<T, std::string>) {
      v = text;
    } else {
      v = parse_number<T>(name, text);
    }
  };
  return k;
}

#define SVD_FIELD(T, name, help, expr) field<T>(name, help, [](PipelineConfig& c) -> T& { return expr; })

// Rejects unknown tags when the key is set rather than at first use.
Key feature_set_key() {
  Key k = SVD_FIELD(std::string, "features.set", "feature set tag, e.g. mfcc or lpcc_mfcc_plp", c.feature_set);
  k.set = [](PipelineConfig& c, const std::string& text) { c.feature_set = FeatureSet::parse(text).tag(); };
  return k;
}

std::vector<Key> build_keys() {
  std::vector<Key> keys = {
      SVD_FIELD(bool, "separation", "run REPET and classify the vocal estimate (on/off)", c.separation),
      feature_set_key(),
      SVD_FIELD(int, "audio.sample_rate", "analysis sample rate in Hz", c.sample_rate),
      SVD_FIELD(double, "audio.frame_ms", "frame length in ms", c.frame_ms),
      SVD_FIELD(double, "audio.hop_ms", "frame hop in ms", c.hop_ms),
      SVD_FIELD(std::size_t, "audio.n_fft", "FFT size (power of two)", c.n_fft),
      SVD_FIELD(double, "repet.min_period_s", "shortest repeating period searched", c.repet.min_period_s),
      SVD_FIELD(double, "repet.max_period_s", "longest repeating period searched", c.repet.max_period_s),
      SVD_FIELD(std::size_t, "mfcc.n_mels", "mel bands", c.features.mfcc.n_mels),
      SVD_FIELD(double, "mfcc.f_min", "lowest mel edge in Hz", c.features.mfcc.f_min),
      SVD_FIELD(double, "mfcc.f_max", "highest mel edge in Hz (0 = Nyquist)", c.features.mfcc.f_max),
      SVD_FIELD(std::size_t, "lpcc.order", "LPC order for LPCC", c.features.lpcc.order),
      SVD_FIELD(std::size_t, "plp.order", "LPC order for PLP", c.features.plp.order),
      SVD_FIELD(std::size_t, "plp.n_bands", "Bark bands", c.features.plp.n_bands),
      SVD_FIELD(double, "plp.compression", "intensity-loudness exponent", c.features.plp.compression),
      SVD_FIELD(std::size_t, "blocks.stride", "frames between training block centres", c.blocks.stride),
      SVD_FIELD(std::size_t, "model.n_filters", "convolution filters", c.model.n_filters),
      SVD_FIELD(std::size_t, "model.kernel_width", "convolution kernel width", c.model.kernel_width),
      SVD_FIELD(std::size_t, "model.hidden", "LSTM hidden units", c.model.hidden),
      SVD_FIELD(std::size_t, "model.pool", "max-pool width", c.model.pool),
      SVD_FIELD(std::size_t, "model.block_len", "frames per block", c.model.block_len),
      SVD_FIELD(double, "train.learning_rate", "SGD learning rate", c.train.learning_rate),
      SVD_FIELD(double, "train.momentum", "SGD momentum", c.train.momentum),
      SVD_FIELD(std::size_t, "train.epochs", "training epochs", c.train.epochs),
      SVD_FIELD(std::size_t, "train.batch_size", "minibatch size", c.train.batch_size),
      SVD_FIELD(std::size_t, "train.patience", "early-stop patience in epochs (0 = off)", c.train.patience),
      SVD_FIELD(double, "train.valid_fraction", "share of training files held out for selection",
                c.valid_fraction),
      SVD_FIELD(std::size_t, "smoothing.median_window", "median window in frames (odd)",
                c.smoothing.median_window),
      SVD_FIELD(std::size_t, "smoothing.n_components", "Gaussians per HMM state", c.smoothing.n_components),
      SVD_FIELD(double, "smoothing.variance_floor", "HMM mixture variance floor", c.smoothing.variance_floor),
      SVD_FIELD(double, "smoothing.prune_weight", "drop mixture components below this weight",
                c.smoothing.prune_weight),
      SVD_FIELD(std::size_t, "smoothing.em_max_iterations", "EM iteration cap", c.smoothing.em_max_iterations),
      SVD_FIELD(double, "smoothing.em_tolerance", "EM per-sample gain tolerance", c.smoothing.em_tolerance),
      SVD_FIELD(std::size_t, "eval.folds", "cross-validation folds", c.folds),
      SVD_FIELD(std::uint64_t, "seed", "master random seed", c.seed),
      SVD_FIELD(std::size_t, "workers", "worker threads", c.workers),
  };

  Key dense;
  dense.name = "model.dense";
  dense.help = "comma-separated dense layer widths (empty for none)";
  dense.get = [](const PipelineConfig& c) {
    std::string out;
    for (std::size_t i = 0; i < c.model.dense.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(c.model.dense[i]);
    }
    return out;
  };
  dense.set = [](PipelineConfig& c, const std::string& text) {
    std::vector<std::size_t> widths;
    std::istringstream parts(text);
    std::string item;
    while (std::getline(parts, item, ',')) {
      item = trim(item);
      if (!item.empty()) widths.push_back(parse_number<std::size_t>("model.dense", item));
    }
    c.model.dense = std::move(widths);
  };

  Key method;
  method.name = "smoothing.method";
  method.help = "none, median or hmm";
  method.get = [](const PipelineConfig& c) { return std::string(smoothing_method_name(c.smoothing.method)); };
  method.set = [](PipelineConfig& c, const std::string& text) { c.smoothing.method = parse_smoothing_method(text); };

  const auto at = [&keys](const std::string& name) {
    return std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == name; });
  };
  keys.insert(at("model.block_len"), std::move(dense));
  keys.insert(at("smoothing.median_window"), std::move(method));
  return keys;
}

#undef SVD_FIELD

const Key& find_key(const std::string& name) {
  for (const auto& k : PipelineConfig::keys()) {
    if (k.name == name) return k;
  }
  throw UsageError("unknown config key '" + name + "'");
}

LrcnConfig model_config(const PipelineConfig& config) {
  LrcnConfig m = config.model;
  m.input_dim = FeatureSet::parse(config.feature_set).dim();
  return m;
}

TrainConfig train_config(const PipelineConfig& config) {
  TrainConfig t = config.train;
  t.seed = config.seed;
  t.workers = config.workers;
  return t;
}

FeatureMatrix normalized(const FeatureMatrix& raw, const NormStats& stats) {
  FeatureMatrix out = raw;
  out.values = apply_norm(raw.values, stats);
  return out;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The exception
/// from the lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), n);
  if (threads <= 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

const std::vector<PipelineConfig::Key>& PipelineConfig::keys() {
  static const std::vector<Key> table = build_keys();
  return table;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  find_key(key).set(*this, trim(value));
}

std::string PipelineConfig::get(const std::string& key) const { return find_key(key).get(*this); }

std::vector<std::pair<std::string, std::string>> PipelineConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(*this));
  return out;
}

void PipelineConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const UsageError& e) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void PipelineConfig::validate() const {
  FeatureSet::parse(feature_set);
  if (sample_rate <= 0) throw UsageError("audio.sample_rate must be positive");
  if (!(frame_ms > 0.0) || !(hop_ms > 0.0) || hop_ms > frame_ms) {
    throw UsageError("audio.frame_ms and audio.hop_ms must be positive with hop <= frame");
  }
  if (n_fft == 0 || (n_fft & (n_fft - 1)) != 0) throw UsageError("audio.n_fft must be a power of two");
  if (!(repet.min_period_s > 0.0) || repet.max_period_s < repet.min_period_s) {
    throw UsageError("repet period range is empty");
  }
  if (blocks.stride == 0) throw UsageError("blocks.stride must be positive");
  model_config(*this).validate();
  train_config(*this).validate();
  smoothing.validate();
  if (folds < 2) throw UsageError("eval.folds must be at least 2");
  if (!(valid_fraction >= 0.0 && valid_fraction < 1.0)) {
    throw UsageError("train.valid_fraction must lie in [0, 1)");
  }
  if (workers == 0) throw UsageError("workers must be positive");
}

std::vector<DatasetItem> read_dataset_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset list: " + path.string());
  const auto base = path.parent_path();
  const auto resolve = [&base](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  std::vector<DatasetItem> items;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream fields(t);
    std::string audio, labels, extra;
    if (!(fields >> audio >> labels) || (fields >> extra)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 'audio_path label_path'");
    }
    DatasetItem item{std::filesystem::path(audio).stem().string(), resolve(audio), resolve(labels)};
    if (!seen.insert(item.id).second) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": duplicate clip id '" + item.id + "'");
    }
    items.push_back(std::move(item));
  }
  if (items.empty()) throw DataError("dataset list is empty: " + path.string());
  return items;
}

AudioClip prepare_clip(const AudioClip& raw, const PipelineConfig& config) {
  AudioClip clip = raw.sample_rate() == config.sample_rate ? raw : resample_linear(raw, config.sample_rate);
  if (!config.separation) return clip;
  SeparationOptions opts = config.repet;
  opts.frame_ms = config.frame_ms;
  opts.hop_ms = config.hop_ms;
  opts.n_fft = config.n_fft;
  return separate(clip, opts).vocal;
}

FrameGrid analysis_grid(const AudioClip& clip, const PipelineConfig& config) {
  return frame_signal(clip, config.frame_ms, config.hop_ms);
}

FeatureMatrix compute_features(const AudioClip& clip, const PipelineConfig& config) {
  const FrameGrid grid = analysis_grid(clip, config);
  const Spectrogram spec = stft(clip, grid, config.n_fft);
  return extract_features(clip, grid, spec, FeatureSet::parse(config.feature_set), config.features);
}

ClipData load_clip(const DatasetItem& item, const PipelineConfig& config) {
  const AudioClip raw = load_wav(item.audio);
  const AudioClip clip = prepare_clip(raw, config);
  ClipData data;
  data.id = item.id;
  data.features = compute_features(clip, config);
  data.labels = load_labels(item.labels, data.features.grid);
  return data;
}

std::vector<ClipData> load_clips(std::span<const DatasetItem> items, const PipelineConfig& config) {
  std::vector<ClipData> out(items.size());
  parallel_for(items.size(), config.workers, [&](std::size_t i) { out[i] = load_clip(items[i], config); });
  return out;
}

TrainedModel train_model(std::span<const ClipData> clips, const PipelineConfig& config) {
  config.validate();
  if (clips.empty()) throw DataError("no training clips");

  std::vector<std::size_t> order(clips.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(config.seed ^ 0xD1B54A32D192ED03ULL);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_valid = static_cast<std::size_t>(std::llround(config.valid_fraction * static_cast<double>(clips.size())));
  if (config.valid_fraction > 0.0 && clips.size() >= 2) n_valid = std::max<std::size_t>(n_valid, 1);
  n_valid = std::min(n_valid, clips.size() - 1);
  std::vector<std::size_t> valid_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_valid));
  std::vector<std::size_t> fit_idx(order.begin() + static_cast<std::ptrdiff_t>(n_valid), order.end());
  std::sort(valid_idx.begin(), valid_idx.end());
  std::sort(fit_idx.begin(), fit_idx.end());

  NormStats stats = fit_norm_stats(clips[fit_idx.front()].features.values);
  for (const auto i : fit_idx) {
    const auto s = fit_norm_stats(clips[i].features.values);
    if (s.min.size() != stats.min.size()) throw DataError("clips disagree on feature dimension");
    stats.min = stats.min.cwiseMin(s.min);
    stats.max = stats.max.cwiseMax(s.max);
  }

  const LrcnConfig model = model_config(config);
  BlockOptions block_opts = config.blocks;
  block_opts.block_len = model.block_len;
  const auto make_blocks = [&](const std::vector<std::size_t>& idx, std::vector<FeatureMatrix>* keep) {
    std::vector<FrameBlock> blocks;
    for (const auto i : idx) {
      FeatureMatrix norm = normalized(clips[i].features, stats);
      auto b = blockify(norm, &clips[i].labels, block_opts);
      blocks.insert(blocks.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
      if (keep != nullptr) keep->push_back(std::move(norm));
    }
    return blocks;
  };
  std::vector<FeatureMatrix> fit_features;
  const auto train_blocks = make_blocks(fit_idx, &fit_features);
  const auto valid_blocks = make_blocks(valid_idx, nullptr);
  if (train_blocks.empty()) throw DataError("training clips are shorter than one block");

  TrainResult trained = train_lrcn(train_blocks, valid_blocks, model, train_config(config));

  TrainedModel out;
  out.checkpoint.params = std::move(trained.params);
  out.checkpoint.feature_set = FeatureSet::parse(config.feature_set).tag();
  out.checkpoint.norm = stats;
  out.checkpoint.config = config.entries();
  out.history = std::move(trained.history);
  out.best_epoch = trained.best_epoch;

  if (config.smoothing.method == SmoothingMethod::kHmm) {
    std::vector<PredictionTrack> tracks(fit_features.size());
    std::vector<LabelTrack> labels;
    parallel_for(fit_features.size(), config.workers,
                 [&](std::size_t k) { tracks[k] = predict_track(fit_features[k], out.checkpoint.params); });
    for (const auto i : fit_idx) labels.push_back(clips[i].labels);
    out.checkpoint.hmm = fit_hmm_gmm(tracks, labels, config.smoothing).model;
  }
  return out;
}

ClipPrediction predict_clip(const Checkpoint& model, const FeatureMatrix& raw_features,
                            const PipelineConfig& config) {
  if (FeatureSet::parse(config.feature_set).tag() != model.feature_set) {
    throw UsageError("checkpoint was trained on '" + model.feature_set + "' features, config asks for '" +
                     config.feature_set + "'");
  }
  const FeatureMatrix feat = model.norm ? normalized(raw_features, *model.norm) : raw_features;
  if (config.smoothing.method == SmoothingMethod::kHmm && !model.hmm) {
    throw UsageError("HMM smoothing requested but the checkpoint has no HMM");
  }
  ClipPrediction out;
  out.posterior = predict_track(feat, model.params);
  out.smoothed = smooth(out.posterior, config.smoothing, model.hmm ? &*model.hmm : nullptr);
  return out;
}

void write_posterior_csv(const std::filesystem::path& path, const ClipPrediction& prediction) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write posterior CSV: " + path.string());
  out << "frame_time,posterior,smoothed_label\n";
  out << std::setprecision(17);
  const auto& p = prediction.posterior;
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << p.grid.center_seconds(i) << ',' << p.posteriors[i] << ',' << int(prediction.smoothed.labels[i]) << '\n';
  }
}

EvalReport cross_validate(std::span<const ClipData> clips, const PipelineConfig& config) {
  config.validate();
  std::vector<std::string> ids;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    ids.push_back(clips[i].id);
    if (!index.emplace(clips[i].id, i).second) throw DataError("duplicate clip id '" + clips[i].id + "'");
  }
  const auto folds = kfold_split(ids, config.folds, config.seed);

  std::vector<FileReport> reports(clips.size());
  for (const auto& fold : folds) {
    std::set<std::size_t> held;
    for (const auto& id : fold) held.insert(index.at(id));
    std::vector<ClipData> train;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      if (!held.contains(i)) train.push_back(clips[i]);
    }
    const TrainedModel model = train_model(train, config);
    const std::vector<std::size_t> test(held.begin(), held.end());
    parallel_for(test.size(), config.workers, [&](std::size_t k) {
      const ClipData& c = clips[test[k]];
      const auto pred = predict_clip(model.checkpoint, c.features, config);
      reports[test[k]] = file_report(c.id, pred.smoothed, c.labels);
    });
  }
  return build_report(std::move(reports));
}

}  // namespace svdetect
