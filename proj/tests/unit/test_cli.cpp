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

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "svdetect/checkpoint.hpp"
#include "synth.hpp"

using namespace svdetect;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    const auto d = fs::temp_directory_path() / "svdetect_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run cli(const std::string& args) {
  const auto err = work_dir() / "stderr.txt";
  const std::string cmd = std::string(SVDETECT_CLI) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

const std::string kQuick =
    "--model.n_filters 4 --model.hidden 4 --model.dense 8 --blocks.stride 10 --train.epochs 2 "
    "--train.batch_size 16 --train.learning_rate 0.005 --eval.folds 3 --smoothing.median_window 9";

fs::path corpus() {
  static const fs::path list = [] {
    synth::ClipSpec spec;
    spec.seconds = 4.0;
    return synth::write_corpus(work_dir() / "corpus", 6, 9, spec);
  }();
  return list;
}

}  // namespace

TEST_CASE("usage errors exit 1 with a parseable line") {
  const auto r = cli("features --input x.wav --out " + (work_dir() / "u").string() + " --set no.such=1");
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: kind=usage message=", 0) == 0);
  CHECK(cli("").code == 1);
  CHECK(cli("frobnicate").code == 1);
}

TEST_CASE("data errors exit 2 and leave no partial output") {
  const auto out = work_dir() / "missing_out";
  const auto r = cli("features --input /nonexistent.wav --out " + out.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("kind=data") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("separate and features write their artifacts") {
  const auto wav = corpus().parent_path() / "clip_000.wav";
  const auto out = work_dir() / "stages";
  REQUIRE(cli("separate --input " + wav.string() + " --out " + out.string()).code == 0);
  CHECK(fs::exists(out / "clip_000.vocal.wav"));
  CHECK(fs::exists(out / "clip_000.accompaniment.wav"));
  CHECK(fs::exists(out / "manifest.txt"));
  REQUIRE(cli("features --input " + wav.string() + " --out " + out.string() + " --features.set mfcc_plp").code == 0);
  std::ifstream csv(out / "clip_000.features.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(std::count(header.begin(), header.end(), ',') == 25);  // 26 columns
}

TEST_CASE("predict with a zero checkpoint gives constant one half") {
  Checkpoint ck;
  ck.params = LrcnParams::zeros(LrcnConfig{});
  const auto model = work_dir() / "zero.ckpt";
  save_checkpoint(model, ck);
  const auto wav = corpus().parent_path() / "clip_001.wav";
  const auto out = work_dir() / "pred";
  REQUIRE(cli("predict --model " + model.string() + " --input " + wav.string() + " --out " + out.string()).code == 0);
  std::ifstream csv(out / "clip_001.posterior.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "frame_time,posterior,smoothed_label");
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    std::string time, post;
    std::istringstream row(line);
    std::getline(row, time, ',');
    std::getline(row, post, ',');
    CHECK(std::stod(post) == 0.5);
    ++rows;
  }
  CHECK(rows > 100);
  CHECK(fs::exists(out / "clip_001.lab"));
}

TEST_CASE("evaluate with prediction equal to truth scores 1") {
  const auto dir = corpus().parent_path();
  const auto out = work_dir() / "eval";
  const auto lab = (dir / "clip_002.lab").string();
  REQUIRE(cli("evaluate --pred " + lab + " --truth " + lab + " --input " + (dir / "clip_002.wav").string() +
              " --out " + out.string())
              .code == 0);
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(report["pooled"]["accuracy"].get<double>() == 1.0);
  CHECK(report["pooled"]["f1"].get<double>() == 1.0);
}

TEST_CASE("train writes a checkpoint and a manifest that reproduces it") {
  const auto a = work_dir() / "train_a";
  const auto b = work_dir() / "train_b";
  REQUIRE(cli("train --list " + corpus().string() + " --out " + a.string() + " " + kQuick).code == 0);
  CHECK(fs::exists(a / "loss_history.csv"));
  CHECK(slurp(a / "loss_history.csv").rfind("epoch,train_loss,valid_f1\n", 0) == 0);
  const auto ck = load_checkpoint(a / "model.ckpt");
  CHECK(ck.params.config.n_filters == 4);

  REQUIRE(cli("train --list " + corpus().string() + " --out " + b.string() + " --config " +
              (a / "manifest.txt").string())
              .code == 0);
  CHECK(slurp(a / "model.ckpt") == slurp(b / "model.ckpt"));
}

TEST_CASE("pipeline reports are reproducible") {
  const auto a = work_dir() / "pipe_a";
  const auto b = work_dir() / "pipe_b";
  REQUIRE(cli("pipeline --list " + corpus().string() + " --out " + a.string() + " " + kQuick).code == 0);
  REQUIRE(cli("pipeline --list " + corpus().string() + " --out " + b.string() + " " + kQuick + " --workers 2")
              .code == 0);
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  const auto report = nlohmann::json::parse(slurp(a / "report.json"));
  CHECK(report["files"].size() == 6);
}
