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

// svdetect: command-line front end. Subcommands separate, features, train,
// predict, evaluate and pipeline. Exit codes: 0 ok, 1 usage, 2 data,
// 3 numeric divergence.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "svdetect/audio.hpp"
#include "svdetect/checkpoint.hpp"
#include "svdetect/error.hpp"
#include "svdetect/evaluation.hpp"
#include "svdetect/pipeline.hpp"
#include "svdetect/separation.hpp"

namespace fs = std::filesystem;
using namespace svdetect;

namespace {

/// Records files a command creates so a failed run leaves nothing behind.
class Artifacts {
 public:
  void prepare_dir(const fs::path& dir) {
    if (dir.empty()) throw UsageError("--out is required");
    if (!fs::exists(dir)) {
      fs::create_directories(dir);
      created_dir_ = dir;
    } else if (!fs::is_directory(dir)) {
      throw UsageError("--out is not a directory: " + dir.string());
    }
  }
  fs::path add(const fs::path& path) {
    files_.push_back(path);
    return path;
  }
  void rollback() noexcept {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    if (!created_dir_.empty() && fs::is_empty(created_dir_, ec)) fs::remove(created_dir_, ec);
  }

 private:
  std::vector<fs::path> files_;
  fs::path created_dir_;
};

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kData: return "data";
    case ErrorKind::kNumeric: return "numeric";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 1;
    case ErrorKind::kData: return 2;
    case ErrorKind::kNumeric: return 3;
  }
  return 2;
}

std::string one_line(std::string s) {
  for (auto& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

void write_manifest(Artifacts& artifacts, const fs::path& dir, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& inputs, const PipelineConfig& cfg) {
  std::ofstream out(artifacts.add(dir / "manifest.txt"));
  if (!out) throw DataError("cannot write manifest in " + dir.string());
  out << "# svdetect " << command << "\n";
  for (const auto& [k, v] : inputs) out << "# " << k << ": " << v << "\n";
  for (const auto& [k, v] : cfg.entries()) out << k << " = " << v << "\n";
}

void configure_logging() {
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("SVDETECT_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

AudioClip load_prepared(const fs::path& path, const PipelineConfig& cfg) {
  return prepare_clip(load_wav(path), cfg);
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"svdetect: singing voice detection (REPET, MFCC/LPCC/PLP, LRCN, smoothing)"};
  app.require_subcommand(1);
  app.fallthrough();

  fs::path config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key = value config file (a previous manifest.txt works)");
  app.add_option("--set", overrides, "override a config key, e.g. --set model.hidden=16");

  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;
  {
    const PipelineConfig defaults;
    for (const auto& key : PipelineConfig::keys()) {
      flag_options[key.name] =
          app.add_option("--" + key.name, flag_values[key.name], key.help + " [" + key.get(defaults) + "]")
              ->group("Config keys");
    }
  }

  fs::path out_dir, input, list_path, model_path, pred_path, truth_path, pred_dir;

  auto* sep = app.add_subcommand("separate", "write vocal and accompaniment estimates");
  sep->add_option("--input", input, "input WAV")->required();
  sep->add_option("--out", out_dir, "output directory")->required();

  auto* feat = app.add_subcommand("features", "write the feature matrix as CSV");
  feat->add_option("--input", input, "input WAV")->required();
  feat->add_option("--out", out_dir, "output directory")->required();

  auto* train = app.add_subcommand("train", "train a model on a dataset list");
  train->add_option("--list", list_path, "dataset list of 'audio_path label_path' lines")->required();
  train->add_option("--out", out_dir, "output directory")->required();

  auto* predict = app.add_subcommand("predict", "posterior CSV and smoothed labels for one clip");
  predict->add_option("--model", model_path, "checkpoint from train")->required();
  predict->add_option("--input", input, "input WAV")->required();
  predict->add_option("--out", out_dir, "output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score predicted label files against ground truth");
  evaluate->add_option("--pred", pred_path, "predicted label file (single-file mode)");
  evaluate->add_option("--truth", truth_path, "ground-truth label file (single-file mode)");
  evaluate->add_option("--input", input, "audio that fixes the frame grid (single-file mode)");
  evaluate->add_option("--list", list_path, "dataset list (batch mode)");
  evaluate->add_option("--pred-dir", pred_dir, "directory of <id>.lab predictions (batch mode)");
  evaluate->add_option("--out", out_dir, "output directory")->required();

  auto* pipe = app.add_subcommand("pipeline", "k-fold cross-validation of the full chain");
  pipe->add_option("--list", list_path, "dataset list of 'audio_path label_path' lines")->required();
  pipe->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: kind=usage message=\"" << one_line(e.what()) << "\"\n";
    return 1;
  }

  Artifacts artifacts;
  try {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [name, opt] : flag_options) {
      if (opt->count() > 0) cfg.set(name, flag_values[name]);
    }
    cfg.validate();
    artifacts.prepare_dir(out_dir);

    if (*sep) {
      write_manifest(artifacts, out_dir, "separate", {{"input", input.string()}}, cfg);
      AudioClip raw = load_wav(input);
      if (raw.sample_rate() != cfg.sample_rate) raw = resample_linear(raw, cfg.sample_rate);
      SeparationOptions opts = cfg.repet;
      opts.frame_ms = cfg.frame_ms;
      opts.hop_ms = cfg.hop_ms;
      opts.n_fft = cfg.n_fft;
      const auto result = separate(raw, opts);
      spdlog::info("repeating period: {} frames", result.period_frames);
      const auto stem = input.stem().string();
      write_wav(artifacts.add(out_dir / (stem + ".vocal.wav")), result.vocal);
      write_wav(artifacts.add(out_dir / (stem + ".accompaniment.wav")), result.accompaniment);
    } else if (*feat) {
      write_manifest(artifacts, out_dir, "features", {{"input", input.string()}}, cfg);
      const auto features = compute_features(load_prepared(input, cfg), cfg);
      write_feature_csv(artifacts.add(out_dir / (input.stem().string() + ".features.csv")), features);
    } else if (*train) {
      write_manifest(artifacts, out_dir, "train", {{"list", list_path.string()}}, cfg);
      const auto items = read_dataset_list(list_path);
      spdlog::info("loading {} clips", items.size());
      const auto clips = load_clips(items, cfg);
      const auto model = train_model(clips, cfg);
      save_checkpoint(artifacts.add(out_dir / "model.ckpt"), model.checkpoint);
      std::ofstream hist(artifacts.add(out_dir / "loss_history.csv"));
      hist << "epoch,train_loss,valid_f1\n" << std::setprecision(17);
      for (const auto& r : model.history) hist << r.epoch << ',' << r.train_loss << ',' << r.valid_f1 << '\n';
      spdlog::info("best epoch {}", model.best_epoch);
    } else if (*predict) {
      write_manifest(artifacts, out_dir, "predict", {{"model", model_path.string()}, {"input", input.string()}},
                     cfg);
      const Checkpoint ckpt = load_checkpoint(model_path);
      const auto features = compute_features(load_prepared(input, cfg), cfg);
      const auto pred = predict_clip(ckpt, features, cfg);
      const auto stem = input.stem().string();
      write_posterior_csv(artifacts.add(out_dir / (stem + ".posterior.csv")), pred);
      write_labels(artifacts.add(out_dir / (stem + ".lab")), pred.smoothed);
    } else if (*evaluate) {
      std::vector<FileReport> files;
      const auto grid_for = [&cfg](const fs::path& audio) {
        AudioClip clip = load_wav(audio);
        if (clip.sample_rate() != cfg.sample_rate) clip = resample_linear(clip, cfg.sample_rate);
        return analysis_grid(clip, cfg);
      };
      if (!list_path.empty()) {
        if (pred_dir.empty()) throw UsageError("--list needs --pred-dir");
        write_manifest(artifacts, out_dir, "evaluate",
                       {{"list", list_path.string()}, {"pred-dir", pred_dir.string()}}, cfg);
        for (const auto& item : read_dataset_list(list_path)) {
          const FrameGrid grid = grid_for(item.audio);
          files.push_back(file_report(item.id, load_labels(pred_dir / (item.id + ".lab"), grid),
                                      load_labels(item.labels, grid)));
        }
      } else {
        if (pred_path.empty() || truth_path.empty() || input.empty()) {
          throw UsageError("evaluate needs --pred, --truth and --input, or --list with --pred-dir");
        }
        write_manifest(artifacts, out_dir, "evaluate",
                       {{"pred", pred_path.string()}, {"truth", truth_path.string()}, {"input", input.string()}},
                       cfg);
        const FrameGrid grid = grid_for(input);
        files.push_back(file_report(input.stem().string(), load_labels(pred_path, grid),
                                    load_labels(truth_path, grid)));
      }
      write_report(artifacts.add(out_dir / "report.json"), build_report(std::move(files)));
    } else if (*pipe) {
      write_manifest(artifacts, out_dir, "pipeline", {{"list", list_path.string()}}, cfg);
      const auto items = read_dataset_list(list_path);
      spdlog::info("loading {} clips", items.size());
      const auto clips = load_clips(items, cfg);
      const auto report = cross_validate(clips, cfg);
      write_report(artifacts.add(out_dir / "report.json"), report);
      spdlog::info("pooled F1 {:.4f}", report.pooled.f1);
    }
    return 0;
  } catch (const Error& e) {
    artifacts.rollback();
    std::cerr << "error: kind=" << kind_name(e.kind()) << " message=\"" << one_line(e.what()) << "\"\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    artifacts.rollback();
    std::cerr << "error: kind=data message=\"" << one_line(e.what()) << "\"\n";
    return 2;
  }
}
