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

#include "svdetect/audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "fft.hpp"
#include "svdetect/error.hpp"

namespace svdetect {
namespace {

constexpr double kPcm16Scale = 32768.0;
constexpr double kColaTolerance = 1e-6;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::size_t samples_for_ms(double ms, int sample_rate) {
  return static_cast<std::size_t>(std::llround(ms * sample_rate / 1000.0));
}

}  // namespace

AudioClip::AudioClip(std::vector<double> samples, int sample_rate, std::string source_id)
    : samples_(std::move(samples)), sample_rate_(sample_rate), source_id_(std::move(source_id)) {
  if (sample_rate_ <= 0) throw DataError("sample rate must be positive");
  for (double s : samples_) {
    if (!std::isfinite(s)) throw DataError("audio contains non-finite samples");
  }
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open wav file: " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                         std::istreambuf_iterator<char>()};
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DataError("not a RIFF/WAVE file: " + path.string());
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (available < 16) throw DataError("truncated fmt chunk: " + path.string());
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      // WAVE_FORMAT_EXTENSIBLE carries the real format in the sub-format GUID.
      if (format == 0xFFFE && available >= 26) format = read_u16(chunk + 32);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = available;
    }
    pos = body + size + (size & 1);
  }

  if (!have_fmt || data == nullptr) throw DataError("wav file missing fmt or data chunk: " + path.string());
  if (format != 1 || bits != 16) {
    throw DataError("unsupported encoding (format " + std::to_string(format) + ", " +
                    std::to_string(bits) + " bits): " + path.string());
  }
  if (channels != 1 && channels != 2) {
    throw DataError("unsupported encoding (" + std::to_string(channels) + " channels): " + path.string());
  }
  if (rate == 0) throw DataError("wav sample rate is zero: " + path.string());

  const std::size_t frame_bytes = 2u * channels;
  const std::size_t n = data_size / frame_bytes;
  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* p = data + i * frame_bytes;
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      acc += static_cast<std::int16_t>(read_u16(p + 2 * c)) / kPcm16Scale;
    }
    samples[i] = acc / channels;
  }
  return AudioClip(std::move(samples), static_cast<int>(rate), path.stem().string());
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  const auto samples = clip.samples();
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate()));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate()) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : samples) {
    const double scaled = std::clamp(std::round(s * kPcm16Scale), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write wav file: " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

AudioClip resample_linear(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw UsageError("target sample rate must be positive");
  if (clip.sample_rate() == target_rate) return clip;
  const auto in = clip.samples();
  if (in.empty()) return AudioClip({}, target_rate, clip.source_id());

  const double ratio = static_cast<double>(clip.sample_rate()) / target_rate;
  const auto n_out = static_cast<std::size_t>(
      std::floor(static_cast<double>(in.size()) * target_rate / clip.sample_rate()));
  std::vector<double> out(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double t = static_cast<double>(i) * ratio;
    const auto k = static_cast<std::size_t>(t);
    const double frac = t - static_cast<double>(k);
    const double a = in[std::min(k, in.size() - 1)];
    const double b = in[std::min(k + 1, in.size() - 1)];
    out[i] = a + frac * (b - a);
  }
  return AudioClip(std::move(out), target_rate, clip.source_id());
}

FrameGrid frame_signal(const AudioClip& clip, double frame_ms, double hop_ms) {
  FrameGrid grid;
  grid.sample_rate = clip.sample_rate();
  grid.frame_len = samples_for_ms(frame_ms, clip.sample_rate());
  grid.hop = samples_for_ms(hop_ms, clip.sample_rate());
  if (grid.frame_len == 0 || grid.hop == 0 || grid.hop > grid.frame_len) {
    throw UsageError("frame parameters need 0 < hop <= frame length");
  }
  if (clip.size() < grid.frame_len) {
    throw DataError("clip shorter than one frame (" + std::to_string(clip.size()) + " < " +
                    std::to_string(grid.frame_len) + " samples)");
  }
  grid.n_frames = (clip.size() - grid.frame_len) / grid.hop + 1;
  return grid;
}

std::vector<double> hamming_window(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                  static_cast<double>(length));
  }
  return w;
}

double cola_deviation(std::span<const double> window, std::size_t hop) {
  if (hop == 0 || window.empty()) throw UsageError("COLA check needs a non-empty window and hop > 0");
  std::vector<double> folded(hop, 0.0);
  for (std::size_t n = 0; n < window.size(); ++n) folded[n % hop] += window[n];
  const auto [lo, hi] = std::minmax_element(folded.begin(), folded.end());
  double mean = 0.0;
  for (double v : folded) mean += v;
  mean /= static_cast<double>(hop);
  if (mean <= 0.0) return 1.0;
  return (*hi - *lo) / mean;
}

Spectrogram stft(const AudioClip& clip, const FrameGrid& grid, std::size_t n_fft) {
  if (n_fft < grid.frame_len) {
    throw UsageError("n_fft (" + std::to_string(n_fft) + ") smaller than frame length (" +
                     std::to_string(grid.frame_len) + ")");
  }
  if (!detail::is_power_of_two(n_fft)) throw UsageError("n_fft must be a power of two");
  if (grid.span_samples() > clip.size()) throw UsageError("frame grid exceeds clip length");

  Spectrogram spec;
  spec.grid = grid;
  spec.n_fft = n_fft;
  spec.window = WindowKind::kHamming;
  spec.bins.resize(static_cast<Eigen::Index>(grid.n_frames), static_cast<Eigen::Index>(n_fft / 2 + 1));

  const auto window = hamming_window(grid.frame_len);
  const auto samples = clip.samples();
  std::vector<double> frame(grid.frame_len);
  for (std::size_t i = 0; i < grid.n_frames; ++i) {
    const std::size_t start = i * grid.hop;
    for (std::size_t n = 0; n < grid.frame_len; ++n) frame[n] = samples[start + n] * window[n];
    const auto bins = detail::rfft(frame, n_fft);
    for (std::size_t k = 0; k < bins.size(); ++k) {
      spec.bins(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = bins[k];
    }
  }
  return spec;
}

AudioClip istft(const Spectrogram& spec) {
  const FrameGrid& grid = spec.grid;
  if (static_cast<std::size_t>(spec.bins.cols()) != spec.n_bins() ||
      static_cast<std::size_t>(spec.bins.rows()) != grid.n_frames) {
    throw UsageError("spectrogram shape does not match its grid");
  }
  const auto window = hamming_window(grid.frame_len);
  if (cola_deviation(window, grid.hop) > kColaTolerance) {
    throw UsageError("window/hop pair violates constant overlap-add (frame " +
                     std::to_string(grid.frame_len) + ", hop " + std::to_string(grid.hop) + ")");
  }

  const std::size_t length = grid.span_samples();
  std::vector<double> out(length, 0.0);
  std::vector<double> weight(length, 0.0);
  std::vector<std::complex<double>> row(spec.n_bins());
  for (std::size_t i = 0; i < grid.n_frames; ++i) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      row[k] = spec.bins(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    const auto frame = detail::irfft(row, spec.n_fft);
    const std::size_t start = i * grid.hop;
    for (std::size_t n = 0; n < grid.frame_len; ++n) {
      out[start + n] += frame[n] * window[n];
      weight[start + n] += window[n] * window[n];
    }
  }
  for (std::size_t n = 0; n < length; ++n) {
    out[n] = weight[n] > 1e-12 ? out[n] / weight[n] : 0.0;
  }
  return AudioClip(std::move(out), grid.sample_rate);
}

}  // namespace svdetect
