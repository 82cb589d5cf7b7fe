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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ututlab {

// Flat key/value configuration shared by every subcommand. Text format:
//
//   ututlab-config 1
//   # comment
//   key = value
//
// Every key has a default; unknown keys are rejected.
class RunConfig {
 public:
  static constexpr int kVersion = 1;

  RunConfig();  // all defaults

  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(const std::string& text, const std::string& origin = "<string>");

  static bool known(const std::string& key);
  static std::vector<std::string> keys();

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  long long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // Canonical text (sorted keys); what save() writes and hash() digests.
  std::string canonical() const;
  // 16 hex digits of FNV-1a over canonical().
  std::string hash() const;
  void save(const std::filesystem::path& path) const;

  bool operator==(const RunConfig&) const = default;

 private:
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(const std::string& data);

}  // namespace ututlab
