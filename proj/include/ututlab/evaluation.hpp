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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ututlab/corpus.hpp"
#include "ututlab/generation.hpp"
#include "ututlab/model.hpp"

namespace ututlab {

// ------------------------------------------------------------------- BLEU

struct BleuOptions {
  int max_n = 4;
  // When > 0, zero n-gram matches are replaced by this count (floor
  // smoothing). Zero keeps plain BLEU, where any empty order scores 0.
  double floor = 0.0;
};

struct BleuReport {
  double score = 0.0;  // [0, 100]
  std::vector<double> precisions;
  std::vector<long long> matches;
  std::vector<long long> totals;
  double brevity_penalty = 1.0;
  long long hyp_length = 0;
  long long ref_length = 0;
};

// Corpus-level BLEU over token ids. References must be nonempty; an empty
// hypothesis contributes length 0 and no n-grams.
BleuReport corpus_bleu(const std::vector<std::vector<int>>& hypotheses, const std::vector<std::vector<int>>& references,
                       const BleuOptions& options = {});

// -------------------------------------------------------------------- CER

long long levenshtein(const std::vector<int>& a, const std::vector<int>& b);
double cer(const std::vector<int>& hypothesis, const std::vector<int>& reference);

// ---------------------------------------------------------- BLEU grid

struct GridEntry {
  Direction direction;
  bool seen = false;  // direction present in the training pair set
  BleuReport report;
  std::size_t num_sentences = 0;
  std::size_t num_truncated = 0;
};

struct BleuGrid {
  std::vector<GridEntry> entries;  // sorted by direction
  double macro_average = 0.0;
  double macro_seen = 0.0;
  double macro_unseen = 0.0;

  const GridEntry& at(const Direction& d) const;
};

// Decodes the source side of every test pair and scores it against the
// target side, which must hold the oracle reference.
BleuGrid evaluate_translation(const ModelState& model, const ParallelCorpus& test_pairs,
                              const std::vector<Direction>& trained, const DecodeConfig& config);

// Renders `concepts` in every direction and evaluates.
BleuGrid evaluate_translation(const ModelState& model, const ToyLanguageSpec& spec,
                              const std::vector<std::vector<int>>& concepts, const std::vector<Direction>& directions,
                              const std::vector<Direction>& trained, const DecodeConfig& config);

void write_bleu_grid_csv(const std::filesystem::path& path, const BleuGrid& grid, const std::string& config_hash = {});

// --------------------------------------------------------- co-occurrence

// One utterance worth of frames: the unit each frame was quantized to and
// the phoneme (concept) it was rendered from, or -1 when unaligned.
struct AlignedFrames {
  std::vector<int> units;
  std::vector<int> phonemes;
};

struct CooccurrenceMatrix {
  std::vector<int> unit_ids;     // rows, most frequent first
  std::vector<int> phoneme_ids;  // columns
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> counts;
};

// Counts frames per (unit, phoneme) over aligned frames, keeping the top_n
// most frequent units (ties by lower id). Unaligned frames are skipped.
CooccurrenceMatrix unit_phoneme_cooccurrence(const std::vector<AlignedFrames>& corpus, int top_n, int num_phonemes);

void write_cooccurrence_csv(const std::filesystem::path& path, const CooccurrenceMatrix& matrix,
                            const std::string& config_hash = {});

}  // namespace ututlab
