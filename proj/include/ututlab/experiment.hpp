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

// RunConfig-driven recipes shared by the command-line tool and the
// acceptance suite.

#include <filesystem>
#include <string>
#include <vector>

#include "ututlab/corpus.hpp"
#include "ututlab/evaluation.hpp"
#include "ututlab/generation.hpp"
#include "ututlab/model.hpp"
#include "ututlab/run_config.hpp"
#include "ututlab/training.hpp"

namespace ututlab {

// Sub-seeds derived from the global seed.
enum class SeedTag : std::uint64_t { kGrammar = 1, kCorpus, kModel, kTrain, kFeatures, kCodebook, kTextEmbedding };
std::uint64_t seed_for(const RunConfig& cfg, SeedTag tag);

// "A:B,C:D" -> directions; empty string -> none.
std::vector<Direction> parse_directions(const std::string& text);

ToyGrammarOptions grammar_options(const RunConfig& cfg);
CorpusOptions corpus_options(const RunConfig& cfg, const std::vector<std::string>& codes);
ModelConfig model_config(const RunConfig& cfg);
TrainOptions train_options(const RunConfig& cfg);
DecodeConfig decode_config(const RunConfig& cfg);

// Generates the corpus, adds reverse pairs when `bidirectional` is set, and
// drops the held-out directions last so augmentation cannot reintroduce them.
ToyCorpus build_training_corpus(const ToyLanguageSpec& spec, const RunConfig& cfg);

struct MaskingAblationRow {
  double p_m = 0.0;
  BleuGrid grid;
  double final_loss = 0.0;
};

// Trains one model per masking ratio on the same corpus and schedule and
// scores each on the test concepts in every direction.
std::vector<MaskingAblationRow> ablate_masking(const ToyLanguageSpec& spec, const ToyCorpus& corpus,
                                               const RunConfig& cfg, const std::vector<double>& ratios);

void write_ablation_csv(const std::filesystem::path& path, const std::vector<MaskingAblationRow>& rows,
                        const std::string& config_hash = {});

}  // namespace ututlab
