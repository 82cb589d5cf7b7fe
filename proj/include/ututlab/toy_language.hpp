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

// Synthetic toy languages that all render one shared concept sequence. Each
// language is a bijective relabelling of concepts into unit ids, an optional
// window-2 swap, and optional prefix/suffix units. Translation between any
// two languages is exact by pivoting through the concepts.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ututlab {

// Adjacent concepts (2i, 2i+1) are swapped when their sum has the given parity.
// Keyed on the sum so the swap is its own inverse.
enum class ReorderRule { kNone, kEvenSum, kOddSum };

struct ToyLanguage {
  std::string code;
  std::vector<int> permutation;  // concept id -> unit id
  ReorderRule reorder = ReorderRule::kNone;
  std::vector<int> prefix;
  std::vector<int> suffix;
};

struct ToyGrammarOptions {
  int num_languages = 4;
  int concept_vocab_size = 48;
  int unit_vocab_size = 64;
  bool identity_permutation = false;
  bool reorder = true;
  bool affixes = true;
  std::uint64_t seed = 0;
};

class ToyLanguageSpec {
 public:
  ToyLanguageSpec() = default;
  ToyLanguageSpec(int concept_vocab_size, int unit_vocab_size, std::uint64_t seed,
                  std::vector<ToyLanguage> languages);

  // Random family: permutations draw content ids from [0, K - 2L); each
  // language owns one prefix and one suffix id from the top 2L ids.
  static ToyLanguageSpec generate(const ToyGrammarOptions& options);

  int concept_vocab_size() const { return concepts_; }
  int unit_vocab_size() const { return units_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<ToyLanguage>& languages() const { return languages_; }
  std::vector<std::string> codes() const;
  const ToyLanguage& language(const std::string& code) const;

  std::vector<int> render(const std::vector<int>& concepts, const std::string& lang) const;
  // Inverse of render. Throws "not a valid src-language sentence" otherwise.
  std::vector<int> decode(const std::vector<int>& units, const std::string& lang) const;
  // Concept id per rendered unit, -1 on affix positions.
  std::vector<int> render_alignment(const std::vector<int>& concepts, const std::string& lang) const;

  void save(const std::filesystem::path& path, const std::string& config_hash = {}) const;
  static ToyLanguageSpec load(const std::filesystem::path& path);

 private:
  void validate() const;

  int concepts_ = 0;
  int units_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<ToyLanguage> languages_;
  std::vector<std::vector<int>> inverse_;  // per language: unit id -> concept id or -1
};

std::vector<int> apply_reorder(std::vector<int> concepts, ReorderRule rule);

}  // namespace ututlab
