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

#include "ututlab/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ututlab/error.hpp"
#include "ututlab/io.hpp"

namespace ututlab {
namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> table = {
      // global
      {"seed", "0"},
      {"out_dir", "."},
      {"deterministic", "false"},
      // toy languages and corpus
      {"languages", "4"},
      {"concepts", "48"},
      {"units", "64"},
      {"identity_permutation", "false"},
      {"reorder", "true"},
      {"affixes", "true"},
      {"num_sentences", "20000"},
      {"min_length", "8"},
      {"max_length", "14"},
      {"directions", ""},
      {"held_out_pair", ""},
      {"num_test_sentences", "100"},
      {"bidirectional", "false"},
      // features and codebook
      {"feature_dim", "16"},
      {"feature_noise", "0.3"},
      {"clusters", "64"},
      {"kmeans_iters", "100"},
      {"kmeans_tol", "1e-6"},
      {"dwell", "4"},
      // model
      {"enc_layers", "2"},
      {"dec_layers", "2"},
      {"dim", "128"},
      {"heads", "4"},
      {"ffn_dim", "512"},
      {"dropout", "0.1"},
      {"max_positions", "256"},
      {"label_smoothing", "0"},
      // training
      {"peak_lr", "1.5e-3"},
      {"warmup_steps", "500"},
      {"total_steps", "8000"},
      {"max_steps", "0"},
      {"p_m", "0"},
      {"lambda", "10"},
      {"max_tokens", "512"},
      {"adam_beta1", "0.9"},
      {"adam_beta2", "0.98"},
      {"adam_eps", "1e-8"},
      {"clip_norm", "0"},
      {"log_interval", "100"},
      {"target_accuracy", "0"},
      // decoding
      {"beam", "5"},
      {"length_penalty", "1.0"},
      {"max_len", "0"},
      // inspection
      {"top_n", "200"},
  };
  return table;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig::RunConfig() : values_(defaults()) {}

bool RunConfig::known(const std::string& key) { return defaults().count(key) > 0; }

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, v] : defaults()) out.push_back(k);
  return out;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const std::string where = origin + ":" + std::to_string(lineno);
    if (!header) {
      require(line == "ututlab-config " + std::to_string(kVersion), ErrorKind::kConfig,
              where + ": expected header 'ututlab-config " + std::to_string(kVersion) + "'");
      header = true;
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::kConfig, where + ": expected key = value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    require(known(key), ErrorKind::kConfig, where + ": unknown key '" + key + "'");
    cfg.set(key, trim(line.substr(eq + 1)));
  }
  require(header, ErrorKind::kConfig, origin + ": missing 'ututlab-config' header");
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "cannot open config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  require(known(key), ErrorKind::kConfig, "unknown config key '" + key + "'");
  require(value.find('\n') == std::string::npos, ErrorKind::kConfig, "config value for " + key + " spans lines");
  values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorKind::kConfig, "unknown config key '" + key + "'");
  return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
  try {
    return io::parse_int(get(key));
  } catch (const Error&) {
    fail(ErrorKind::kConfig, "config key " + key + " needs an integer, got '" + get(key) + "'");
  }
}

double RunConfig::get_double(const std::string& key) const {
  try {
    return io::parse_double(get(key));
  } catch (const Error&) {
    fail(ErrorKind::kConfig, "config key " + key + " needs a number, got '" + get(key) + "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorKind::kConfig, "config key " + key + " needs true or false, got '" + v + "'");
}

std::string RunConfig::canonical() const {
  std::string out = "ututlab-config " + std::to_string(kVersion) + "\n";
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorKind::kIo, "cannot open for writing: " + path.string());
  out << "# config_hash=" << hash() << '\n' << canonical();
  require(out.good(), ErrorKind::kIo, "write failed: " + path.string());
}

}  // namespace ututlab
