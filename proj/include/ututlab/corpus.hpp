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
#include <string>
#include <vector>

#include "ututlab/codec.hpp"
#include "ututlab/toy_language.hpp"

namespace ututlab {

struct Direction {
  std::string src;
  std::string tgt;

  static Direction parse(const std::string& text);  // "A:B"
  std::string str() const { return src + ":" + tgt; }
  auto operator<=>(const Direction&) const = default;
};

struct ParallelPair {
  std::string pair_id;
  UnitSequence src;
  UnitSequence tgt;

  Direction direction() const { return {src.lang, tgt.lang}; }
  bool operator==(const ParallelPair&) const = default;
};

using ParallelCorpus = std::vector<ParallelPair>;

struct CorpusOptions {
  int num_sentences = 1000;
  int min_length = 8;  // concepts per sentence
  int max_length = 14;
  // Directions to sample pairs from; empty means every ordered language pair.
  std::vector<Direction> directions;
  // Removed from `directions` (the held-out pair set).
  std::vector<Direction> held_out;
  int num_test_sentences = 100;
  std::uint64_t seed = 0;
};

struct ToyCorpus {
  ParallelCorpus train;
  std::vector<std::vector<int>> train_concepts;  // one per training pair
  std::vector<std::vector<int>> test_concepts;   // disjoint from training
};

std::vector<Direction> all_directions(const std::vector<std::string>& codes);

// Draws concept sentences (rejecting any whose rendering in some language has
// adjacent duplicate units) and renders one pair per sentence, cycling
// through the allowed directions.
ToyCorpus generate_toy_corpus(const ToyLanguageSpec& spec, const CorpusOptions& options);

// Exact translation by decoding to concepts and re-rendering.
UnitSequence toy_translate_oracle(const ToyLanguageSpec& spec, const UnitSequence& seq, const std::string& src,
                                  const std::string& tgt);

// Adds the reverse of every pair. Not idempotent: applying twice quadruples.
ParallelCorpus augment_bidirectional(const ParallelCorpus& corpus);

ParallelCorpus drop_directions(const ParallelCorpus& corpus, const std::vector<Direction>& excluded);

// Renders each concept sentence in every listed direction (evaluation sets).
ParallelCorpus render_pairs(const ToyLanguageSpec& spec, const std::vector<std::vector<int>>& concepts,
                            const std::vector<Direction>& directions, const std::string& id_prefix);

std::vector<Direction> directions_of(const ParallelCorpus& corpus);

void write_corpus_manifest(const std::filesystem::path& path, const ParallelCorpus& corpus,
                           const std::string& config_hash = {});
ParallelCorpus read_corpus_manifest(const std::filesystem::path& path);

}  // namespace ututlab
