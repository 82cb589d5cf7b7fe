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
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ututlab/corpus.hpp"
#include "ututlab/vocabulary.hpp"

namespace ututlab {

using TokenMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PadMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;  // true = pad

// One training row in token-id space.
struct TrainingExample {
  std::string id;
  std::vector<int> src;  // <L_s> symbols... EOS
  std::vector<int> tgt;  // <L_t> units... EOS
};

TrainingExample make_example(const std::string& id, const std::string& src_lang, const std::vector<int>& src,
                             const Vocabulary& src_vocab, const std::string& tgt_lang,
                             const std::vector<int>& tgt, const Vocabulary& tgt_vocab);

std::vector<TrainingExample> to_examples(const ParallelCorpus& corpus, const Vocabulary& vocab);

struct Batch {
  std::vector<std::string> ids;
  TokenMatrix src_tokens;  // <L_s> units EOS, padded
  TokenMatrix tgt_input;   // <L_t> units, padded
  TokenMatrix tgt_output;  // units EOS, padded
  PadMask src_pad;
  PadMask tgt_input_pad;
  PadMask tgt_output_pad;
  int src_pad_id = 0;
  int tgt_pad_id = 0;

  int rows() const { return static_cast<int>(ids.size()); }
  std::vector<int> src_row(int r) const;
  std::vector<int> tgt_input_row(int r) const;
  std::vector<int> tgt_output_row(int r) const;
  long long src_token_count() const { return (!src_pad).count(); }
  long long tgt_token_count() const { return (!tgt_output_pad).count() + 1LL * rows(); }
};

Batch build_batch(const std::vector<const TrainingExample*>& rows, int src_pad_id, int tgt_pad_id);

struct BatchingOptions {
  int max_tokens = 1024;  // per side, counting language token and EOS
  std::uint64_t seed = 0;
  bool sort_buckets = true;
};

// One epoch of batches. Rows are shuffled, stably sorted by length when
// bucketing, packed greedily until the next row would overflow either side,
// and the batch order is shuffled. Throws kBudget when a single row exceeds
// the budget.
std::vector<Batch> make_batches(const std::vector<TrainingExample>& examples, const BatchingOptions& options,
                                int src_pad_id, int tgt_pad_id);

}  // namespace ututlab
