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

#include <string>
#include <vector>

namespace ututlab {

// Unified token id space: base symbols [0, B), then PAD, EOS, MASK, then one
// token per language. For the unit model B is the unit count K; for the text
// frontend B is the phoneme inventory size.
class Vocabulary {
 public:
  static constexpr int kNumSpecials = 3;

  Vocabulary() = default;
  Vocabulary(int base_symbols, std::vector<std::string> languages);

  int base_symbols() const { return base_; }
  int pad() const { return base_; }
  int eos() const { return base_ + 1; }
  int mask() const { return base_ + 2; }
  int size() const { return base_ + kNumSpecials + static_cast<int>(languages_.size()); }
  int num_languages() const { return static_cast<int>(languages_.size()); }

  const std::vector<std::string>& languages() const { return languages_; }
  int language_index(const std::string& code) const;  // throws on unknown code
  int language_token(const std::string& code) const { return base_ + kNumSpecials + language_index(code); }
  int language_token(int index) const { return base_ + kNumSpecials + index; }

  bool is_base(int id) const { return id >= 0 && id < base_; }
  bool is_language(int id) const { return id >= base_ + kNumSpecials && id < size(); }

  bool operator==(const Vocabulary&) const = default;

 private:
  int base_ = 0;
  std::vector<std::string> languages_;
};

}  // namespace ututlab
