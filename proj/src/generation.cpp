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

#include "ututlab/generation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ututlab/error.hpp"

namespace ututlab {
namespace {

struct Partial {
  std::vector<int> tokens;  // generated ids after <L_t>
  double log_prob = 0.0;
};

int resolve_max_len(const DecodeConfig& config, std::size_t src_len) {
  return config.max_len > 0 ? config.max_len : static_cast<int>(2 * src_len + 10);
}

bool allowed(const Vocabulary& v, int id) { return v.is_base(id) || id == v.eos(); }

// Log-probabilities of the next token for every partial hypothesis.
Mat next_log_probs(const ModelState& model, const EncoderOutput& encoded, int bos, const std::vector<Partial>& open) {
  std::vector<std::vector<int>> rows;
  for (const auto& p : open) {
    std::vector<int> row{bos};
    row.insert(row.end(), p.tokens.begin(), p.tokens.end());
    rows.push_back(std::move(row));
  }
  const Mat logits = decode_logits(model, encoded, rows, std::vector<int>(open.size(), 0));
  Mat last(static_cast<Eigen::Index>(open.size()), logits.cols());
  Eigen::Index end = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    end += static_cast<Eigen::Index>(rows[i].size());
    last.row(static_cast<Eigen::Index>(i)) = logits.row(end - 1);
  }
  return log_softmax_rows(last);
}

ScoredHypothesis finalize(const Vocabulary& vocab, const Partial& p, bool truncated, double length_penalty) {
  ScoredHypothesis h;
  h.log_prob = p.log_prob;
  h.truncated = truncated;
  const double len = static_cast<double>(std::max<std::size_t>(p.tokens.size(), 1));
  h.score = p.log_prob / std::pow(len, length_penalty);
  for (int t : p.tokens) {
    if (vocab.is_base(t) && (h.units.empty() || h.units.back() != t)) h.units.push_back(t);
  }
  return h;
}

DecodeResult package(std::vector<ScoredHypothesis> pool, const std::string& tgt_lang) {
  std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  DecodeResult r;
  std::map<std::vector<int>, bool> seen;
  for (auto& h : pool) {
    if (seen.emplace(h.units, true).second) r.nbest.push_back(std::move(h));
  }
  const auto& best = r.nbest.front();
  r.output = UnitSequence{"", tgt_lang, best.units, true};
  r.truncated = best.truncated;
  r.log_prob = best.log_prob;
  r.score = best.score;
  return r;
}

std::vector<int> encoder_row(const ModelState& model, const std::string& src_lang, const std::vector<int>& units) {
  std::vector<int> row{model.src_vocab.language_token(src_lang)};
  row.insert(row.end(), units.begin(), units.end());
  row.push_back(model.src_vocab.eos());
  return row;
}

ScoredHypothesis greedy_path(const ModelState& model, const EncoderOutput& encoded, int bos, int max_len,
                             double length_penalty) {
  const auto& vocab = model.vocab;
  std::vector<Partial> open{Partial{}};
  for (int step = 0; step < max_len; ++step) {
    const Mat logp = next_log_probs(model, encoded, bos, open);
    int arg = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < logp.cols(); ++t) {
      if (allowed(vocab, t) && logp(0, t) > best) {
        best = logp(0, t);
        arg = t;
      }
    }
    open[0].tokens.push_back(arg);
    open[0].log_prob += best;
    if (arg == vocab.eos()) return finalize(vocab, open[0], false, length_penalty);
  }
  return finalize(vocab, open[0], true, length_penalty);
}

// Plain width-limited beam search; returns finished hypotheses plus the open
// ones still alive at max_len.
std::vector<ScoredHypothesis> beam_search(const ModelState& model, const EncoderOutput& encoded, int bos, int max_len,
                                          int width, double length_penalty) {
  const auto& vocab = model.vocab;
  std::vector<ScoredHypothesis> pool;
  std::vector<Partial> open{Partial{}};
  for (int step = 0; step < max_len && !open.empty(); ++step) {
    const Mat logp = next_log_probs(model, encoded, bos, open);
    struct Candidate {
      double log_prob;
      std::size_t parent;
      int token;
    };
    std::vector<Candidate> cands;
    for (std::size_t h = 0; h < open.size(); ++h) {
      for (int t = 0; t < logp.cols(); ++t) {
        if (allowed(vocab, t)) cands.push_back({open[h].log_prob + logp(static_cast<Eigen::Index>(h), t), h, t});
      }
    }
    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(width), cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Partial> next;
    for (std::size_t i = 0; i < keep; ++i) {
      Partial p = open[cands[i].parent];
      p.tokens.push_back(cands[i].token);
      p.log_prob = cands[i].log_prob;
      if (cands[i].token == vocab.eos()) {
        pool.push_back(finalize(vocab, p, false, length_penalty));
      } else {
        next.push_back(std::move(p));
      }
    }
    open = std::move(next);
    if (length_penalty == 0.0 && !open.empty() && !pool.empty()) {
      // Unnormalised scores only fall as hypotheses grow.
      double best_finished = pool.front().score;
      for (const auto& h : pool) best_finished = std::max(best_finished, h.score);
      double best_open = open.front().log_prob;
      for (const auto& p : open) best_open = std::max(best_open, p.log_prob);
      if (best_finished >= best_open) open.clear();
    }
  }
  for (const auto& p : open) pool.push_back(finalize(vocab, p, true, length_penalty));
  return pool;
}

}  // namespace

DecodeResult greedy_decode(const ModelState& model, const std::string& src_lang, const std::vector<int>& src_units,
                           const std::string& tgt_lang, const DecodeConfig& config) {
  require(config.max_len >= 0, ErrorKind::kInvalidArgument, "max_len must be non-negative");
  const auto encoded = encode(model, {encoder_row(model, src_lang, src_units)});
  const int bos = model.vocab.language_token(tgt_lang);
  return package({greedy_path(model, encoded, bos, resolve_max_len(config, src_units.size()), config.length_penalty)},
                 tgt_lang);
}

DecodeResult beam_decode(const ModelState& model, const std::string& src_lang, const std::vector<int>& src_units,
                         const std::string& tgt_lang, const DecodeConfig& config) {
  require(config.beam >= 1, ErrorKind::kInvalidArgument, "beam must be at least 1");
  require(config.length_penalty >= 0.0, ErrorKind::kInvalidArgument, "length_penalty must be non-negative");
  require(config.max_len >= 0, ErrorKind::kInvalidArgument, "max_len must be non-negative");
  const auto encoded = encode(model, {encoder_row(model, src_lang, src_units)});
  const int bos = model.vocab.language_token(tgt_lang);
  const int max_len = resolve_max_len(config, src_units.size());
  // Plain beam search is not monotone in the width, so every narrower width
  // contributes its hypotheses too. Width 1 is the greedy path.
  std::vector<ScoredHypothesis> pool;
  for (int width = 1; width <= config.beam; ++width) {
    auto part = beam_search(model, encoded, bos, max_len, width, config.length_penalty);
    pool.insert(pool.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return package(std::move(pool), tgt_lang);
}

DecodeResult translate(const ModelState& model, const std::string& src_lang, const std::vector<int>& src_units,
                       const std::string& tgt_lang, const DecodeConfig& config) {
  if (config.beam == 1 && config.length_penalty == 0.0) {
    return greedy_decode(model, src_lang, src_units, tgt_lang, config);
  }
  return beam_decode(model, src_lang, src_units, tgt_lang, config);
}

}  // namespace ututlab
