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
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ututlab::io {

// Little-endian binary writer over an output file. Throws Error(kIo) on failure.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path);

  void bytes(std::string_view raw);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v);
  void f32(float v);
  void f64(double v);
  void str(std::string_view s);  // u32 length prefix + bytes
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// Little-endian binary reader. Every short read throws Error(kFormat, "truncated ...").
class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);

  std::string bytes(std::size_t n);
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64();
  float f32();
  double f64();
  std::string str();
  bool at_end();

 private:
  void read_exact(char* dst, std::size_t n);

  std::filesystem::path path_;
  std::ifstream in_;
};

std::vector<std::string> split(std::string_view line, char sep);
std::vector<int> parse_ints(std::string_view field);
std::string join_ints(std::span<const int> values);
int parse_int(std::string_view field);
double parse_double(std::string_view field);

// Reads lines, skipping empty lines and '#' comment lines (config-hash stamps).
std::vector<std::string> read_data_lines(const std::filesystem::path& path);

// Opens a text file for writing; the first line is a "# config_hash=<hex>"
// stamp when config_hash is non-empty.
std::ofstream open_text_output(const std::filesystem::path& path, std::string_view config_hash);

}  // namespace ututlab::io
