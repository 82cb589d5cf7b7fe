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

#include "ututlab/toy_language.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "ututlab/error.hpp"
#include "ututlab/io.hpp"
#include "ututlab/rng.hpp"

namespace ututlab {
namespace {

constexpr int kSpecVersion = 1;

std::string rule_name(ReorderRule r) {
  switch (r) {
    case ReorderRule::kNone: return "none";
    case ReorderRule::kEvenSum: return "even";
    case ReorderRule::kOddSum: return "odd";
  }
  return "none";
}

ReorderRule parse_rule(const std::string& s) {
  if (s == "none") return ReorderRule::kNone;
  if (s == "even") return ReorderRule::kEvenSum;
  if (s == "odd") return ReorderRule::kOddSum;
  fail(ErrorKind::kFormat, "unknown reorder rule '" + s + "'");
}

}  // namespace

std::vector<int> apply_reorder(std::vector<int> concepts, ReorderRule rule) {
  if (rule == ReorderRule::kNone) return concepts;
  const int parity = rule == ReorderRule::kEvenSum ? 0 : 1;
  for (std::size_t i = 0; i + 1 < concepts.size(); i += 2) {
    if ((concepts[i] + concepts[i + 1]) % 2 == parity) std::swap(concepts[i], concepts[i + 1]);
  }
  return concepts;
}

ToyLanguageSpec::ToyLanguageSpec(int concept_vocab_size, int unit_vocab_size, std::uint64_t seed,
                                 std::vector<ToyLanguage> languages)
    : concepts_(concept_vocab_size), units_(unit_vocab_size), seed_(seed), languages_(std::move(languages)) {
  validate();
  for (const auto& lang : languages_) {
    std::vector<int> inv(static_cast<std::size_t>(units_), -1);
    for (int c = 0; c < concepts_; ++c) inv[static_cast<std::size_t>(lang.permutation[c])] = c;
    inverse_.push_back(std::move(inv));
  }
}

void ToyLanguageSpec::validate() const {
  require(concepts_ >= 1, ErrorKind::kInvalidArgument, "concept vocabulary must be nonempty");
  require(languages_.size() >= 2, ErrorKind::kInvalidArgument, "need at least two toy languages");
  std::set<std::string> codes;
  for (const auto& lang : languages_) {
    require(!lang.code.empty() && codes.insert(lang.code).second, ErrorKind::kInvalidArgument,
            "language codes must be unique and nonempty");
    require(static_cast<int>(lang.permutation.size()) == concepts_, ErrorKind::kInvalidArgument,
            "permutation of " + lang.code + " must cover every concept");
    std::set<int> content(lang.permutation.begin(), lang.permutation.end());
    require(static_cast<int>(content.size()) == concepts_, ErrorKind::kInvalidArgument,
            "permutation of " + lang.code + " is not injective");
    require(*content.begin() >= 0 && *content.rbegin() < units_, ErrorKind::kInvalidArgument,
            "permutation of " + lang.code + " leaves the unit range");
    for (const auto* affix : {&lang.prefix, &lang.suffix}) {
      for (int a : *affix) {
        require(a >= 0 && a < units_, ErrorKind::kInvalidArgument, "affix id outside unit range");
        require(!content.contains(a), ErrorKind::kInvalidArgument,
                "affix collision: unit " + std::to_string(a) + " is also content in " + lang.code);
      }
    }
    // Affixes must not create adjacent duplicates with each other.
    require(std::adjacent_find(lang.prefix.begin(), lang.prefix.end()) == lang.prefix.end() &&
                std::adjacent_find(lang.suffix.begin(), lang.suffix.end()) == lang.suffix.end(),
            ErrorKind::kInvalidArgument, "affix of " + lang.code + " repeats a unit");
  }
}

ToyLanguageSpec ToyLanguageSpec::generate(const ToyGrammarOptions& options) {
  require(options.num_languages >= 2 && options.num_languages <= 26, ErrorKind::kInvalidArgument,
          "toy grammars support 2..26 languages");
  const int reserved = options.affixes ? 2 * options.num_languages : 0;
  require(options.concept_vocab_size <= options.unit_vocab_size - reserved, ErrorKind::kInvalidArgument,
          "infeasible spec: " + std::to_string(options.concept_vocab_size) + " concepts + " +
              std::to_string(reserved) + " affix ids exceed " + std::to_string(options.unit_vocab_size) + " units");
  Rng rng(options.seed);
  const int content_ids = options.unit_vocab_size - reserved;
  std::vector<ToyLanguage> langs;
  for (int i = 0; i < options.num_languages; ++i) {
    ToyLanguage lang;
    lang.code = std::string(1, static_cast<char>('A' + i));
    if (options.identity_permutation) {
      lang.permutation.resize(static_cast<std::size_t>(options.concept_vocab_size));
      std::iota(lang.permutation.begin(), lang.permutation.end(), 0);
    } else {
      std::vector<int> pool(static_cast<std::size_t>(content_ids));
      std::iota(pool.begin(), pool.end(), 0);
      rng.shuffle(pool.begin(), pool.end());
      lang.permutation.assign(pool.begin(), pool.begin() + options.concept_vocab_size);
    }
    if (options.reorder) lang.reorder = static_cast<ReorderRule>(i % 3);
    if (options.affixes) {
      lang.prefix = {content_ids + 2 * i};
      lang.suffix = {content_ids + 2 * i + 1};
    }
    langs.push_back(std::move(lang));
  }
  return ToyLanguageSpec(options.concept_vocab_size, options.unit_vocab_size, options.seed, std::move(langs));
}

std::vector<std::string> ToyLanguageSpec::codes() const {
  std::vector<std::string> out;
  for (const auto& l : languages_) out.push_back(l.code);
  return out;
}

const ToyLanguage& ToyLanguageSpec::language(const std::string& code) const {
  for (const auto& l : languages_) {
    if (l.code == code) return l;
  }
  fail(ErrorKind::kInvalidArgument, "unknown language '" + code + "'");
}

std::vector<int> ToyLanguageSpec::render(const std::vector<int>& concepts, const std::string& lang) const {
  const auto& l = language(lang);
  std::vector<int> out(l.prefix);
  for (int c : apply_reorder(concepts, l.reorder)) {
    require(c >= 0 && c < concepts_, ErrorKind::kInvalidArgument, "concept id out of range");
    out.push_back(l.permutation[static_cast<std::size_t>(c)]);
  }
  out.insert(out.end(), l.suffix.begin(), l.suffix.end());
  return out;
}

std::vector<int> ToyLanguageSpec::render_alignment(const std::vector<int>& concepts,
                                                   const std::string& lang) const {
  const auto& l = language(lang);
  std::vector<int> out(l.prefix.size(), -1);
  for (int c : apply_reorder(concepts, l.reorder)) out.push_back(c);
  out.insert(out.end(), l.suffix.size(), -1);
  return out;
}

std::vector<int> ToyLanguageSpec::decode(const std::vector<int>& units, const std::string& lang) const {
  const auto index = static_cast<std::size_t>(
      std::find_if(languages_.begin(), languages_.end(), [&](const auto& l) { return l.code == lang; }) -
      languages_.begin());
  require(index < languages_.size(), ErrorKind::kInvalidArgument, "unknown language '" + lang + "'");
  const auto& l = languages_[index];
  const auto& inv = inverse_[index];
  const auto invalid = [&] { fail(ErrorKind::kInvalidArgument, "not a valid " + lang + "-language sentence"); };
  if (units.size() < l.prefix.size() + l.suffix.size() + 1) invalid();
  if (!std::equal(l.prefix.begin(), l.prefix.end(), units.begin())) invalid();
  if (!std::equal(l.suffix.rbegin(), l.suffix.rend(), units.rbegin())) invalid();
  std::vector<int> concepts;
  for (std::size_t i = l.prefix.size(); i + l.suffix.size() < units.size(); ++i) {
    const int u = units[i];
    if (u < 0 || u >= units_ || inv[static_cast<std::size_t>(u)] < 0) invalid();
    concepts.push_back(inv[static_cast<std::size_t>(u)]);
  }
  return apply_reorder(std::move(concepts), l.reorder);
}

void ToyLanguageSpec::save(const std::filesystem::path& path, const std::string& config_hash) const {
  auto out = io::open_text_output(path, config_hash);
  out << "ututlab-toy-languages " << kSpecVersion << '\n';
  out << "concepts " << concepts_ << '\n';
  out << "units " << units_ << '\n';
  out << "seed " << seed_ << '\n';
  for (const auto& l : languages_) {
    out << "language " << l.code << '\n';
    out << "permutation " << io::join_ints(l.permutation) << '\n';
    out << "reorder " << rule_name(l.reorder) << '\n';
    out << "prefix " << io::join_ints(l.prefix) << '\n';
    out << "suffix " << io::join_ints(l.suffix) << '\n';
    out << "end\n";
  }
  require(out.good(), ErrorKind::kIo, "write failed: " + path.string());
}

ToyLanguageSpec ToyLanguageSpec::load(const std::filesystem::path& path) {
  const auto lines = io::read_data_lines(path);
  require(!lines.empty(), ErrorKind::kFormat, "empty language spec file " + path.string());
  {
    std::istringstream header(lines.front());
    std::string magic;
    int version = 0;
    header >> magic >> version;
    require(magic == "ututlab-toy-languages", ErrorKind::kFormat, "not a toy language spec: " + path.string());
    require(version == kSpecVersion, ErrorKind::kFormat, "unsupported language spec version " + std::to_string(version));
  }
  int concepts = -1, units = -1;
  std::uint64_t seed = 0;
  std::vector<ToyLanguage> langs;
  ToyLanguage* current = nullptr;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto space = lines[i].find(' ');
    const std::string key = lines[i].substr(0, space);
    const std::string value = space == std::string::npos ? "" : lines[i].substr(space + 1);
    if (key == "concepts") {
      concepts = io::parse_int(value);
    } else if (key == "units") {
      units = io::parse_int(value);
    } else if (key == "seed") {
      seed = std::stoull(value);
    } else if (key == "language") {
      langs.push_back(ToyLanguage{value, {}, ReorderRule::kNone, {}, {}});
      current = &langs.back();
    } else if (key == "end") {
      current = nullptr;
    } else {
      require(current != nullptr, ErrorKind::kFormat, "key '" + key + "' outside a language block");
      if (key == "permutation") {
        current->permutation = io::parse_ints(value);
      } else if (key == "reorder") {
        current->reorder = parse_rule(value);
      } else if (key == "prefix") {
        current->prefix = io::parse_ints(value);
      } else if (key == "suffix") {
        current->suffix = io::parse_ints(value);
      } else {
        fail(ErrorKind::kFormat, "unknown key '" + key + "' in language spec");
      }
    }
  }
  require(concepts > 0 && units > 0, ErrorKind::kFormat, "language spec lacks concepts/units");
  return ToyLanguageSpec(concepts, units, seed, std::move(langs));
}

}  // namespace ututlab
