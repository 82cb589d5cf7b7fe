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

#include "ututlab/batching.hpp"

#include <algorithm>
#include <numeric>

#include "ututlab/error.hpp"
#include "ututlab/rng.hpp"

namespace ututlab {
namespace {

std::vector<int> unpadded(const TokenMatrix& m, const PadMask& pad, int r) {
  std::vector<int> out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (!pad(r, c)) out.push_back(m(r, c));
  }
  return out;
}

}  // namespace

TrainingExample make_example(const std::string& id, const std::string& src_lang, const std::vector<int>& src,
                             const Vocabulary& src_vocab, const std::string& tgt_lang,
                             const std::vector<int>& tgt, const Vocabulary& tgt_vocab) {
  require(!src.empty() && !tgt.empty(), ErrorKind::kInvalidArgument, "empty side in example " + id);
  TrainingExample ex;
  ex.id = id;
  ex.src.reserve(src.size() + 2);
  ex.src.push_back(src_vocab.language_token(src_lang));
  for (int s : src) {
    require(src_vocab.is_base(s), ErrorKind::kInvalidArgument,
            "source symbol " + std::to_string(s) + " out of range in " + id);
    ex.src.push_back(s);
  }
  ex.src.push_back(src_vocab.eos());
  ex.tgt.reserve(tgt.size() + 2);
  ex.tgt.push_back(tgt_vocab.language_token(tgt_lang));
  for (int t : tgt) {
    require(tgt_vocab.is_base(t), ErrorKind::kInvalidArgument,
            "target unit " + std::to_string(t) + " out of range in " + id);
    ex.tgt.push_back(t);
  }
  ex.tgt.push_back(tgt_vocab.eos());
  return ex;
}

std::vector<TrainingExample> to_examples(const ParallelCorpus& corpus, const Vocabulary& vocab) {
  std::vector<TrainingExample> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus) {
    out.push_back(make_example(p.pair_id, p.src.lang, p.src.units, vocab, p.tgt.lang, p.tgt.units, vocab));
  }
  return out;
}

std::vector<int> Batch::src_row(int r) const { return unpadded(src_tokens, src_pad, r); }
std::vector<int> Batch::tgt_input_row(int r) const { return unpadded(tgt_input, tgt_input_pad, r); }
std::vector<int> Batch::tgt_output_row(int r) const { return unpadded(tgt_output, tgt_output_pad, r); }

Batch build_batch(const std::vector<const TrainingExample*>& rows, int src_pad_id, int tgt_pad_id) {
  Batch b;
  b.src_pad_id = src_pad_id;
  b.tgt_pad_id = tgt_pad_id;
  std::size_t src_w = 0, tgt_w = 0;
  for (const auto* ex : rows) {
    src_w = std::max(src_w, ex->src.size());
    tgt_w = std::max(tgt_w, ex->tgt.size() - 1);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  b.src_tokens = TokenMatrix::Constant(n, static_cast<Eigen::Index>(src_w), src_pad_id);
  b.tgt_input = TokenMatrix::Constant(n, static_cast<Eigen::Index>(tgt_w), tgt_pad_id);
  b.tgt_output = TokenMatrix::Constant(n, static_cast<Eigen::Index>(tgt_w), tgt_pad_id);
  b.src_pad = PadMask::Constant(n, static_cast<Eigen::Index>(src_w), true);
  b.tgt_input_pad = PadMask::Constant(n, static_cast<Eigen::Index>(tgt_w), true);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& ex = *rows[static_cast<std::size_t>(r)];
    b.ids.push_back(ex.id);
    for (std::size_t c = 0; c < ex.src.size(); ++c) {
      b.src_tokens(r, static_cast<Eigen::Index>(c)) = ex.src[c];
      b.src_pad(r, static_cast<Eigen::Index>(c)) = false;
    }
    for (std::size_t c = 0; c + 1 < ex.tgt.size(); ++c) {
      b.tgt_input(r, static_cast<Eigen::Index>(c)) = ex.tgt[c];
      b.tgt_output(r, static_cast<Eigen::Index>(c)) = ex.tgt[c + 1];
      b.tgt_input_pad(r, static_cast<Eigen::Index>(c)) = false;
    }
  }
  b.tgt_output_pad = b.tgt_input_pad;
  return b;
}

std::vector<Batch> make_batches(const std::vector<TrainingExample>& examples, const BatchingOptions& options,
                                int src_pad_id, int tgt_pad_id) {
  for (const auto& ex : examples) {
    const auto need = std::max(ex.src.size(), ex.tgt.size());
    require(need <= static_cast<std::size_t>(options.max_tokens), ErrorKind::kBudget,
            "pair " + ex.id + " needs " + std::to_string(need) + " tokens but the batch budget is " +
                std::to_string(options.max_tokens));
  }
  Rng rng(options.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  if (options.sort_buckets) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& x = examples[a];
      const auto& y = examples[b];
      if (x.src.size() != y.src.size()) return x.src.size() < y.src.size();
      return x.tgt.size() < y.tgt.size();
    });
  }

  std::vector<std::vector<const TrainingExample*>> groups;
  std::size_t src_used = 0, tgt_used = 0;
  for (auto idx : order) {
    const auto& ex = examples[idx];
    const auto budget = static_cast<std::size_t>(options.max_tokens);
    if (groups.empty() || src_used + ex.src.size() > budget || tgt_used + ex.tgt.size() > budget) {
      groups.emplace_back();
      src_used = tgt_used = 0;
    }
    groups.back().push_back(&ex);
    src_used += ex.src.size();
    tgt_used += ex.tgt.size();
  }
  rng.shuffle(groups.begin(), groups.end());

  std::vector<Batch> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(build_batch(g, src_pad_id, tgt_pad_id));
  return out;
}

}  // namespace ututlab
