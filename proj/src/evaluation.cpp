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

#include "ututlab/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <map>

#include "ututlab/error.hpp"
#include "ututlab/io.hpp"

namespace ututlab {

const GridEntry& BleuGrid::at(const Direction& d) const {
  for (const auto& e : entries) {
    if (e.direction == d) return e;
  }
  fail(ErrorKind::kInvalidArgument, "direction " + d.str() + " not in grid");
}

BleuGrid evaluate_translation(const ModelState& model, const ParallelCorpus& test_pairs,
                              const std::vector<Direction>& trained, const DecodeConfig& config) {
  require(!test_pairs.empty(), ErrorKind::kInvalidArgument, "no test pairs to evaluate");
  struct Accum {
    std::vector<std::vector<int>> hyps, refs;
    std::size_t truncated = 0;
  };
  std::map<Direction, Accum> by_dir;
  for (const auto& pair : test_pairs) {
    auto& acc = by_dir[pair.direction()];
    const auto result = translate(model, pair.src.lang, pair.src.units, pair.tgt.lang, config);
    acc.hyps.push_back(result.output.units);
    acc.refs.push_back(pair.tgt.units);
    if (result.truncated) ++acc.truncated;
  }

  BleuGrid grid;
  double sum = 0.0, sum_seen = 0.0, sum_unseen = 0.0;
  int n_seen = 0, n_unseen = 0;
  for (auto& [dir, acc] : by_dir) {
    GridEntry e;
    e.direction = dir;
    e.seen = std::find(trained.begin(), trained.end(), dir) != trained.end();
    e.report = corpus_bleu(acc.hyps, acc.refs);
    e.num_sentences = acc.hyps.size();
    e.num_truncated = acc.truncated;
    sum += e.report.score;
    (e.seen ? sum_seen : sum_unseen) += e.report.score;
    ++(e.seen ? n_seen : n_unseen);
    grid.entries.push_back(std::move(e));
  }
  grid.macro_average = sum / static_cast<double>(grid.entries.size());
  grid.macro_seen = n_seen > 0 ? sum_seen / n_seen : 0.0;
  grid.macro_unseen = n_unseen > 0 ? sum_unseen / n_unseen : 0.0;
  return grid;
}

BleuGrid evaluate_translation(const ModelState& model, const ToyLanguageSpec& spec,
                              const std::vector<std::vector<int>>& concepts, const std::vector<Direction>& directions,
                              const std::vector<Direction>& trained, const DecodeConfig& config) {
  return evaluate_translation(model, render_pairs(spec, concepts, directions, "test"), trained, config);
}

void write_bleu_grid_csv(const std::filesystem::path& path, const BleuGrid& grid, const std::string& config_hash) {
  auto out = io::open_text_output(path, config_hash);
  out << "src_lang,tgt_lang,bleu,seen_flag\n" << std::fixed << std::setprecision(4);
  for (const auto& e : grid.entries) {
    out << e.direction.src << ',' << e.direction.tgt << ',' << e.report.score << ',' << (e.seen ? "seen" : "unseen")
        << '\n';
  }
  out << "macro,macro," << grid.macro_average << ",all\n";
  require(out.good(), ErrorKind::kIo, "write failed: " + path.string());
}

CooccurrenceMatrix unit_phoneme_cooccurrence(const std::vector<AlignedFrames>& corpus, int top_n, int num_phonemes) {
  require(!corpus.empty(), ErrorKind::kInvalidArgument, "co-occurrence needs aligned frames");
  require(top_n >= 1, ErrorKind::kInvalidArgument, "top_n must be at least 1");
  require(num_phonemes >= 1, ErrorKind::kInvalidArgument, "num_phonemes must be at least 1");

  std::map<int, long long> freq;
  for (const auto& utt : corpus) {
    require(utt.units.size() == utt.phonemes.size(), ErrorKind::kInvalidArgument,
            "alignment length mismatch: " + std::to_string(utt.units.size()) + " units vs " +
                std::to_string(utt.phonemes.size()) + " phoneme labels");
    for (std::size_t i = 0; i < utt.units.size(); ++i) {
      require(utt.phonemes[i] < num_phonemes, ErrorKind::kInvalidArgument,
              "phoneme id " + std::to_string(utt.phonemes[i]) + " out of range");
      if (utt.phonemes[i] >= 0) ++freq[utt.units[i]];
    }
  }
  std::vector<std::pair<int, long long>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > static_cast<std::size_t>(top_n)) ranked.resize(static_cast<std::size_t>(top_n));

  CooccurrenceMatrix m;
  std::map<int, Eigen::Index> row_of;
  for (const auto& [unit, count] : ranked) {
    row_of[unit] = static_cast<Eigen::Index>(m.unit_ids.size());
    m.unit_ids.push_back(unit);
  }
  for (int p = 0; p < num_phonemes; ++p) m.phoneme_ids.push_back(p);
  m.counts.setZero(static_cast<Eigen::Index>(m.unit_ids.size()), num_phonemes);
  for (const auto& utt : corpus) {
    for (std::size_t i = 0; i < utt.units.size(); ++i) {
      if (utt.phonemes[i] < 0) continue;
      const auto it = row_of.find(utt.units[i]);
      if (it != row_of.end()) ++m.counts(it->second, utt.phonemes[i]);
    }
  }
  return m;
}

void write_cooccurrence_csv(const std::filesystem::path& path, const CooccurrenceMatrix& matrix,
                            const std::string& config_hash) {
  auto out = io::open_text_output(path, config_hash);
  out << "unit";
  for (int p : matrix.phoneme_ids) out << ',' << p;
  out << '\n';
  for (Eigen::Index r = 0; r < matrix.counts.rows(); ++r) {
    out << matrix.unit_ids[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < matrix.counts.cols(); ++c) out << ',' << matrix.counts(r, c);
    out << '\n';
  }
  require(out.good(), ErrorKind::kIo, "write failed: " + path.string());
}

}  // namespace ututlab
