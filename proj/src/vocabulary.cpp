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

#include "ututlab/vocabulary.hpp"

#include <algorithm>
#include <set>

#include "ututlab/error.hpp"

namespace ututlab {

Vocabulary::Vocabulary(int base_symbols, std::vector<std::string> languages)
    : base_(base_symbols), languages_(std::move(languages)) {
  require(base_symbols >= 1, ErrorKind::kInvalidArgument, "vocabulary needs at least one base symbol");
  require(std::set<std::string>(languages_.begin(), languages_.end()).size() == languages_.size(),
          ErrorKind::kInvalidArgument, "duplicate language code in vocabulary");
}

int Vocabulary::language_index(const std::string& code) const {
  const auto it = std::find(languages_.begin(), languages_.end(), code);
  require(it != languages_.end(), ErrorKind::kInvalidArgument, "unknown language '" + code + "'");
  return static_cast<int>(it - languages_.begin());
}

}  // namespace ututlab
