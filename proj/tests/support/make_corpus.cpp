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

// make_corpus: writes a synthetic corpus (WAV + label files + list.txt).

#include <cstdint>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic singing-voice corpus"};
  std::filesystem::path out;
  std::size_t clips = 50;
  std::uint64_t seed = 7;
  svdetect::synth::ClipSpec spec;
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--clips", clips, "number of clips");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--seconds", spec.seconds, "clip length");
  app.add_option("--voice-db", spec.voice_db, "voice level relative to accompaniment");
  CLI11_PARSE(app, argc, argv);
  std::cout << svdetect::synth::write_corpus(out, clips, seed, spec).string() << "\n";
  return 0;
}
