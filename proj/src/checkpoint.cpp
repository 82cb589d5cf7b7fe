// Copyright 2026 The ututlab Authors
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

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "ututlab/error.hpp"
#include "ututlab/io.hpp"
#include "ututlab/training.hpp"

namespace ututlab {
namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint32_t kDtypeF64 = 1;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string config_block(const ModelConfig& c) {
  std::ostringstream os;
  os << "enc_layers=" << c.enc_layers << '\n'
     << "dec_layers=" << c.dec_layers << '\n'
     << "dim=" << c.dim << '\n'
     << "heads=" << c.heads << '\n'
     << "ffn_dim=" << c.ffn_dim << '\n'
     << "dropout=" << format_double(c.dropout) << '\n'
     << "max_positions=" << c.max_positions << '\n'
     << "vocab_size=" << c.vocab_size << '\n'
     << "src_vocab_size=" << c.src_vocab_size << '\n'
     << "label_smoothing=" << format_double(c.label_smoothing) << '\n'
     << "seed=" << c.seed << '\n';
  return os.str();
}

std::map<std::string, std::string> parse_block(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::kFormat, "malformed checkpoint block line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

const std::string& field(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  require(it != kv.end(), ErrorKind::kFormat, "checkpoint lacks field '" + key + "'");
  return it->second;
}

ModelConfig parse_config(const std::string& text) {
  const auto kv = parse_block(text);
  ModelConfig c;
  c.enc_layers = io::parse_int(field(kv, "enc_layers"));
  c.dec_layers = io::parse_int(field(kv, "dec_layers"));
  c.dim = io::parse_int(field(kv, "dim"));
  c.heads = io::parse_int(field(kv, "heads"));
  c.ffn_dim = io::parse_int(field(kv, "ffn_dim"));
  c.dropout = io::parse_double(field(kv, "dropout"));
  c.max_positions = io::parse_int(field(kv, "max_positions"));
  c.vocab_size = io::parse_int(field(kv, "vocab_size"));
  c.src_vocab_size = io::parse_int(field(kv, "src_vocab_size"));
  c.label_smoothing = io::parse_double(field(kv, "label_smoothing"));
  c.seed = std::stoull(field(kv, "seed"));
  c.validate();
  return c;
}

std::string vocab_block(const ModelState& m) {
  auto langs = [](const Vocabulary& v) {
    std::string s;
    for (std::size_t i = 0; i < v.languages().size(); ++i) s += (i ? "," : "") + v.languages()[i];
    return s;
  };
  std::ostringstream os;
  os << "base=" << m.vocab.base_symbols() << '\n'
     << "languages=" << langs(m.vocab) << '\n'
     << "src_base=" << m.src_vocab.base_symbols() << '\n'
     << "src_languages=" << langs(m.src_vocab) << '\n';
  return os.str();
}

std::vector<std::string> split_langs(const std::string& s) {
  if (s.empty()) return {};
  return io::split(s, ',');
}

// Shapes every tensor for the config; values are zero.
ModelState allocate(const ModelConfig& config, const Vocabulary& vocab, const Vocabulary& src_vocab) {
  ModelConfig base = config;
  base.src_vocab_size = 0;
  ModelState m = init_model(base, vocab);
  m.config = config;
  m.src_vocab = src_vocab;
  if (config.src_vocab_size > 0) m.params.src_embedding.resize(config.src_vocab_size, config.dim);
  m.params = zeros_like(m.params);
  return m;
}

void write_tensor(io::BinaryWriter& w, const std::string& name, const Mat& t) {
  w.str(name);
  w.u32(kDtypeF64);
  w.u32(static_cast<std::uint32_t>(t.rows()));
  w.u32(static_cast<std::uint32_t>(t.cols()));
  for (Eigen::Index i = 0; i < t.size(); ++i) w.f64(t.data()[i]);
}

std::string shape_str(Eigen::Index r, Eigen::Index c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::BinaryWriter w(path);
  w.bytes("UTUT");
  w.u32(kCheckpointVersion);
  w.str(config_block(ckpt.model.config));
  w.str(vocab_block(ckpt.model));
  w.i64(ckpt.step);
  w.str(ckpt.rng_state);
  const auto& a = ckpt.optimizer.config;
  w.f64(a.beta1);
  w.f64(a.beta2);
  w.f64(a.epsilon);
  w.f64(a.clip_norm);
  w.i64(ckpt.optimizer.step);

  const bool has_moments = ckpt.optimizer.first_moment.embedding.size() > 0;
  std::uint32_t count = 0;
  for_each_tensor(ckpt.model.params, [&](const std::string&, const Mat&) { count += has_moments ? 3 : 1; });
  w.u32(count);
  for_each_tensor(ckpt.model.params, [&](const std::string& name, const Mat& t) { write_tensor(w, "param/" + name, t); });
  if (has_moments) {
    for_each_tensor(ckpt.optimizer.first_moment,
                    [&](const std::string& name, const Mat& t) { write_tensor(w, "adam_m/" + name, t); });
    for_each_tensor(ckpt.optimizer.second_moment,
                    [&](const std::string& name, const Mat& t) { write_tensor(w, "adam_v/" + name, t); });
  }
  w.bytes("END!");
  w.close();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  io::BinaryReader r(path);
  require(r.bytes(4) == "UTUT", ErrorKind::kFormat, "bad magic in checkpoint " + path.string());
  const auto version = r.u32();
  require(version == kCheckpointVersion, ErrorKind::kFormat,
          "checkpoint version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kCheckpointVersion) + ")");
  Checkpoint ckpt;
  const ModelConfig config = parse_config(r.str());
  const auto vkv = parse_block(r.str());
  const Vocabulary vocab(io::parse_int(field(vkv, "base")), split_langs(field(vkv, "languages")));
  const Vocabulary src_vocab(io::parse_int(field(vkv, "src_base")), split_langs(field(vkv, "src_languages")));
  ckpt.model = allocate(config, vocab, src_vocab);
  ckpt.step = r.i64();
  ckpt.rng_state = r.str();
  AdamConfig adam;
  adam.beta1 = r.f64();
  adam.beta2 = r.f64();
  adam.epsilon = r.f64();
  adam.clip_norm = r.f64();
  ckpt.optimizer = OptimizerState::zeros_for(ckpt.model.params, adam);
  ckpt.optimizer.step = r.i64();

  std::map<std::string, Mat*> slots;
  for_each_tensor(ckpt.model.params, [&](const std::string& n, Mat& t) { slots["param/" + n] = &t; });
  for_each_tensor(ckpt.optimizer.first_moment, [&](const std::string& n, Mat& t) { slots["adam_m/" + n] = &t; });
  for_each_tensor(ckpt.optimizer.second_moment, [&](const std::string& n, Mat& t) { slots["adam_v/" + n] = &t; });

  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    const auto dtype = r.u32();
    require(dtype == kDtypeF64, ErrorKind::kFormat, "unsupported dtype for tensor " + name);
    const auto rows = r.u32();
    const auto cols = r.u32();
    const auto it = slots.find(name);
    require(it != slots.end(), ErrorKind::kFormat, "unexpected tensor " + name + " in checkpoint");
    Mat& t = *it->second;
    require(t.rows() == rows && t.cols() == cols, ErrorKind::kFormat,
            "tensor " + name + " has shape " + shape_str(rows, cols) + ", config implies " +
                shape_str(t.rows(), t.cols()));
    for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = r.f64();
    slots.erase(it);
  }
  for (const auto& [name, slot] : slots) {
    require(!name.starts_with("param/"), ErrorKind::kFormat, "checkpoint is missing tensor " + name);
  }
  require(r.bytes(4) == "END!", ErrorKind::kFormat, "missing end marker in checkpoint " + path.string());
  return ckpt;
}

void restore_parameters(ModelState& target, const ModelState& source) {
  std::vector<std::pair<std::string, const Mat*>> src;
  for_each_tensor(source.params, [&](const std::string& n, const Mat& t) { src.emplace_back(n, &t); });
  std::vector<std::pair<std::string, Mat*>> dst;
  for_each_tensor(target.params, [&](const std::string& n, Mat& t) { dst.emplace_back(n, &t); });
  for (std::size_t i = 0; i < std::max(src.size(), dst.size()); ++i) {
    require(i < src.size() && i < dst.size() && src[i].first == dst[i].first, ErrorKind::kInvalidArgument,
            "tensor layout mismatch at " + (i < dst.size() ? dst[i].first : src[i].first));
    const Mat& s = *src[i].second;
    Mat& d = *dst[i].second;
    require(s.rows() == d.rows() && s.cols() == d.cols(), ErrorKind::kInvalidArgument,
            "shape mismatch at " + dst[i].first + ": model has " + shape_str(d.rows(), d.cols()) +
                ", checkpoint has " + shape_str(s.rows(), s.cols()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i].second = *src[i].second;
}

}  // namespace ututlab
