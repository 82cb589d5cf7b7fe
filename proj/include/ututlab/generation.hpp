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

#include "ututlab/codec.hpp"
#include "ututlab/model.hpp"

namespace ututlab {

struct DecodeConfig {
  int max_len = 0;  // decoding steps including EOS; 0 means 2 * |src| + 10
  int beam = 5;
  double length_penalty = 1.0;
};

struct ScoredHypothesis {
  std::vector<int> units;  // special-free, deduplicated
  double log_prob = 0.0;   // sum of token log-probabilities (EOS included when finished)
  double score = 0.0;      // log_prob / length^length_penalty
  bool truncated = false;  // hit max_len before EOS
};

struct DecodeResult {
  UnitSequence output;
  bool truncated = false;
  double log_prob = 0.0;
  double score = 0.0;
  std::vector<ScoredHypothesis> nbest;  // best first, unique unit sequences
};

// Starts from <L_t>, takes the argmax over units and EOS (lowest id on ties)
// until EOS or max_len.
DecodeResult greedy_decode(const ModelState& model, const std::string& src_lang, const std::vector<int>& src_units,
                           const std::string& tgt_lang, const DecodeConfig& config = {});

// Beam search over units and EOS. Finished and max_len-truncated hypotheses
// are ranked together by length-normalised score. A plain
// search of every narrower width also contributes, so the best unnormalised
// score never decreases as the beam widens.
DecodeResult beam_decode(const ModelState& model, const std::string& src_lang, const std::vector<int>& src_units,
                         const std::string& tgt_lang, const DecodeConfig& config = {});

// Dispatches to greedy_decode when beam == 1 and length_penalty == 0.
DecodeResult translate(const ModelState& model, const std::string& src_lang, const std::vector<int>& src_units,
                       const std::string& tgt_lang, const DecodeConfig& config = {});

}  // namespace ututlab
