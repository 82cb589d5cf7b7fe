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

#include "ututlab/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>

#include "ututlab/error.hpp"

namespace ututlab::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  require(out_.good(), ErrorKind::kIo, "cannot open for writing: " + path.string());
}

void BinaryWriter::bytes(std::string_view raw) {
  out_.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  require(out_.good(), ErrorKind::kIo, "write failed: " + path_.string());
}

void BinaryWriter::u32(std::uint32_t v) { bytes({reinterpret_cast<const char*>(&v), sizeof v}); }
void BinaryWriter::u64(std::uint64_t v) { bytes({reinterpret_cast<const char*>(&v), sizeof v}); }
void BinaryWriter::i64(std::int64_t v) { bytes({reinterpret_cast<const char*>(&v), sizeof v}); }
void BinaryWriter::f32(float v) { bytes({reinterpret_cast<const char*>(&v), sizeof v}); }
void BinaryWriter::f64(double v) { bytes({reinterpret_cast<const char*>(&v), sizeof v}); }

void BinaryWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s);
}

void BinaryWriter::close() {
  out_.close();
  require(!out_.fail(), ErrorKind::kIo, "close failed: " + path_.string());
}

BinaryReader::BinaryReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  require(in_.good(), ErrorKind::kIo, "cannot open: " + path.string());
}

void BinaryReader::read_exact(char* dst, std::size_t n) {
  in_.read(dst, static_cast<std::streamsize>(n));
  require(static_cast<std::size_t>(in_.gcount()) == n, ErrorKind::kFormat,
          "truncated file: " + path_.string());
}

std::string BinaryReader::bytes(std::size_t n) {
  std::string out(n, '\0');
  read_exact(out.data(), n);
  return out;
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v;
  read_exact(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  read_exact(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::int64_t BinaryReader::i64() {
  std::int64_t v;
  read_exact(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

float BinaryReader::f32() {
  float v;
  read_exact(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

double BinaryReader::f64() {
  double v;
  read_exact(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::string BinaryReader::str() {
  const auto n = u32();
  require(n < (1u << 30), ErrorKind::kFormat, "implausible string length in " + path_.string());
  return bytes(n);
}

bool BinaryReader::at_end() { return in_.peek() == std::ifstream::traits_type::eof(); }

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

int parse_int(std::string_view field) {
  int v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  require(ec == std::errc() && ptr == end, ErrorKind::kFormat,
          "not an integer: '" + std::string(field) + "'");
  return v;
}

double parse_double(std::string_view field) {
  double v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  require(ec == std::errc() && ptr == end, ErrorKind::kFormat,
          "not a number: '" + std::string(field) + "'");
  return v;
}

std::vector<int> parse_ints(std::string_view field) {
  std::vector<int> out;
  std::size_t i = 0;
  while (i < field.size()) {
    while (i < field.size() && field[i] == ' ') ++i;
    std::size_t j = i;
    while (j < field.size() && field[j] != ' ') ++j;
    if (j > i) out.push_back(parse_int(field.substr(i, j - i)));
    i = j;
  }
  return out;
}

std::string join_ints(std::span<const int> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<std::string> read_data_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "cannot open: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

std::ofstream open_text_output(const std::filesystem::path& path, std::string_view config_hash) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorKind::kIo, "cannot open for writing: " + path.string());
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
  return out;
}

}  // namespace ututlab::io
