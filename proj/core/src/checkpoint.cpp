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

#include "svdetect/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "lrcn_internal.hpp"
#include "svdetect/error.hpp"

namespace svdetect {
namespace {

constexpr char kMagic[8] = {'S', 'V', 'D', 'L', 'R', 'C', 'N', '\0'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  template <class T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

  void tensor(const std::string& name, std::vector<std::uint64_t> dims, std::span<const double> values) {
    uint(static_cast<std::uint16_t>(name.size()));
    bytes(name.data(), name.size());
    uint(static_cast<std::uint8_t>(dims.size()));
    for (auto d : dims) uint(d);
    for (double v : values) f64(v);
  }

  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw DataError("checkpoint is truncated");
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <class T>
  T uint() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<T>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(T);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
};

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::size_t parse_size(const std::map<std::string, std::string>& header, const std::string& key) {
  const auto it = header.find(key);
  if (it == header.end()) throw DataError("checkpoint header lacks '" + key + "'");
  try {
    std::size_t used = 0;
    const auto v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError("checkpoint header has a bad value for '" + key + "'");
  }
}

void copy_into(const std::map<std::string, Tensor>& tensors, const std::string& name, std::span<double> dst) {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw DataError("checkpoint lacks tensor '" + name + "'");
  if (it->second.values.size() != dst.size()) throw DataError("checkpoint tensor '" + name + "' has the wrong size");
  std::copy(it->second.values.begin(), it->second.values.end(), dst.begin());
}

std::vector<double> take_vector(const std::map<std::string, Tensor>& tensors, const std::string& name) {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw DataError("checkpoint lacks tensor '" + name + "'");
  return it->second.values;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  ckpt.params.validate();
  const LrcnConfig& cfg = ckpt.params.config;
  std::ostringstream header;
  header << "lrcn.input_dim=" << cfg.input_dim << '\n'
         << "lrcn.n_filters=" << cfg.n_filters << '\n'
         << "lrcn.kernel_width=" << cfg.kernel_width << '\n'
         << "lrcn.hidden=" << cfg.hidden << '\n'
         << "lrcn.pool=" << cfg.pool << '\n'
         << "lrcn.dense=" << join_sizes(cfg.dense) << '\n'
         << "lrcn.block_len=" << cfg.block_len << '\n'
         << "features.set=" << ckpt.feature_set << '\n';
  for (const auto& [k, v] : ckpt.config) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw UsageError("config entries may not contain '=' in keys or newlines");
    }
    header << "config." << k << '=' << v << '\n';
  }
  const std::string text = header.str();

  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.uint(kCheckpointVersion);
  w.uint(static_cast<std::uint32_t>(text.size()));
  w.bytes(text.data(), text.size());

  std::uint32_t count = static_cast<std::uint32_t>(detail::tensor_names(cfg).size());
  if (ckpt.norm) count += 2;
  if (ckpt.hmm) count += 3 + 6;
  w.uint(count);

  const auto names = detail::tensor_names(cfg);
  const auto spans = detail::tensor_spans(const_cast<LrcnParams&>(ckpt.params));
  const LrcnParams& p = ckpt.params;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes = {
      {p.conv.rows(), p.conv.cols()}, {p.w_i.rows(), p.w_i.cols()}, {p.b_i.size(), 1},
      {p.w_f.rows(), p.w_f.cols()},   {p.b_f.size(), 1},            {p.w_c.rows(), p.w_c.cols()},
      {p.b_c.size(), 1},              {p.w_o.rows(), p.w_o.cols()}, {p.b_o.size(), 1}};
  for (std::size_t l = 0; l < p.dense_w.size(); ++l) {
    shapes.emplace_back(p.dense_w[l].rows(), p.dense_w[l].cols());
    shapes.emplace_back(p.dense_b[l].size(), 1);
  }
  shapes.emplace_back(1, p.out_w.size());
  shapes.emplace_back(1, 1);
  for (std::size_t t = 0; t < names.size(); ++t) {
    w.tensor("lrcn." + names[t],
             {static_cast<std::uint64_t>(shapes[t].first), static_cast<std::uint64_t>(shapes[t].second)},
             spans[t]);
  }

  if (ckpt.norm) {
    const auto& n = *ckpt.norm;
    if (n.min.size() != n.max.size()) throw UsageError("normalization min/max sizes differ");
    w.tensor("norm.min", {static_cast<std::uint64_t>(n.min.size())}, {n.min.data(), static_cast<std::size_t>(n.min.size())});
    w.tensor("norm.max", {static_cast<std::uint64_t>(n.max.size())}, {n.max.data(), static_cast<std::size_t>(n.max.size())});
  }
  if (ckpt.hmm) {
    const HmmGmmModel& m = *ckpt.hmm;
    const std::vector<double> trans = {m.transition[0][0], m.transition[0][1], m.transition[1][0], m.transition[1][1]};
    const std::vector<double> flag = {m.degenerate ? 1.0 : 0.0};
    w.tensor("hmm.initial", {2}, m.initial);
    w.tensor("hmm.transition", {2, 2}, trans);
    w.tensor("hmm.degenerate", {1}, flag);
    for (std::size_t s = 0; s < 2; ++s) {
      const auto& g = m.emission[s];
      const std::string prefix = "hmm.state" + std::to_string(s) + ".";
      w.tensor(prefix + "weights", {g.weights.size()}, g.weights);
      w.tensor(prefix + "means", {g.means.size()}, g.means);
      w.tensor(prefix + "variances", {g.variances.size()}, g.variances);
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw DataError("not a svdetect checkpoint");
  const auto version = r.uint<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::string text = r.bytes(r.uint<std::uint32_t>());

  std::map<std::string, std::string> header;
  Checkpoint ckpt;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed checkpoint header line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key.rfind("config.", 0) == 0) {
      ckpt.config.emplace_back(key.substr(7), value);
    } else {
      header[key] = value;
    }
  }

  LrcnConfig cfg;
  cfg.input_dim = parse_size(header, "lrcn.input_dim");
  cfg.n_filters = parse_size(header, "lrcn.n_filters");
  cfg.kernel_width = parse_size(header, "lrcn.kernel_width");
  cfg.hidden = parse_size(header, "lrcn.hidden");
  cfg.pool = parse_size(header, "lrcn.pool");
  cfg.block_len = parse_size(header, "lrcn.block_len");
  cfg.dense.clear();
  {
    const auto it = header.find("lrcn.dense");
    if (it == header.end()) throw DataError("checkpoint header lacks 'lrcn.dense'");
    std::istringstream parts(it->second);
    std::string item;
    while (std::getline(parts, item, ',')) {
      if (item.empty()) continue;
      try {
        cfg.dense.push_back(static_cast<std::size_t>(std::stoull(item)));
      } catch (const std::exception&) {
        throw DataError("checkpoint header has a bad dense layer size");
      }
    }
  }
  if (const auto it = header.find("features.set"); it != header.end()) ckpt.feature_set = it->second;
  try {
    cfg.validate();
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint model shape is invalid: ") + e.what());
  }

  std::map<std::string, Tensor> tensors;
  const auto count = r.uint<std::uint32_t>();
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string name = r.bytes(r.uint<std::uint16_t>());
    Tensor tensor;
    const auto rank = r.uint<std::uint8_t>();
    std::uint64_t total = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      tensor.dims.push_back(r.uint<std::uint64_t>());
      total *= tensor.dims.back();
    }
    r.need(total * 8);
    tensor.values.resize(total);
    for (auto& v : tensor.values) v = r.f64();
    tensors.emplace(name, std::move(tensor));
  }
  if (!r.done()) throw DataError("checkpoint has trailing bytes");

  ckpt.params = LrcnParams::zeros(cfg);
  const auto names = detail::tensor_names(cfg);
  auto spans = detail::tensor_spans(ckpt.params);
  for (std::size_t t = 0; t < names.size(); ++t) copy_into(tensors, "lrcn." + names[t], spans[t]);
  ckpt.params.validate();

  if (tensors.contains("norm.min")) {
    const auto lo = take_vector(tensors, "norm.min");
    const auto hi = take_vector(tensors, "norm.max");
    if (lo.size() != hi.size()) throw DataError("checkpoint normalization min/max sizes differ");
    NormStats stats;
    stats.min = Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    stats.max = Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    ckpt.norm = std::move(stats);
  }
  if (tensors.contains("hmm.initial")) {
    HmmGmmModel m;
    const auto init = take_vector(tensors, "hmm.initial");
    const auto trans = take_vector(tensors, "hmm.transition");
    const auto flag = take_vector(tensors, "hmm.degenerate");
    if (init.size() != 2 || trans.size() != 4 || flag.size() != 1) throw DataError("checkpoint HMM tensors malformed");
    m.initial = {init[0], init[1]};
    m.transition = {{{trans[0], trans[1]}, {trans[2], trans[3]}}};
    m.degenerate = flag[0] != 0.0;
    for (std::size_t s = 0; s < 2; ++s) {
      const std::string prefix = "hmm.state" + std::to_string(s) + ".";
      m.emission[s].weights = take_vector(tensors, prefix + "weights");
      m.emission[s].means = take_vector(tensors, prefix + "means");
      m.emission[s].variances = take_vector(tensors, prefix + "variances");
    }
    m.validate();
    ckpt.hmm = std::move(m);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace svdetect
