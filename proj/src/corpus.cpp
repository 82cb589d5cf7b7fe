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

#include "ututlab/corpus.hpp"

#include <algorithm>
#include <set>

#include "ututlab/error.hpp"
#include "ututlab/io.hpp"
#include "ututlab/rng.hpp"

namespace ututlab {
namespace {

bool has_adjacent_repeat(const std::vector<int>& v) {
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

UnitSequence make_sequence(std::string id, std::string lang, std::vector<int> units) {
  return UnitSequence{std::move(id), std::move(lang), std::move(units), true};
}

}  // namespace

Direction Direction::parse(const std::string& text) {
  const auto colon = text.find(':');
  require(colon != std::string::npos && colon > 0 && colon + 1 < text.size(), ErrorKind::kConfig,
          "direction must look like SRC:TGT, got '" + text + "'");
  return {text.substr(0, colon), text.substr(colon + 1)};
}

std::vector<Direction> all_directions(const std::vector<std::string>& codes) {
  std::vector<Direction> out;
  for (const auto& s : codes) {
    for (const auto& t : codes) {
      if (s != t) out.push_back({s, t});
    }
  }
  return out;
}

ToyCorpus generate_toy_corpus(const ToyLanguageSpec& spec, const CorpusOptions& options) {
  require(spec.languages().size() >= 2, ErrorKind::kInvalidArgument, "need at least two languages");
  require(options.min_length >= 1 && options.max_length >= options.min_length, ErrorKind::kInvalidArgument,
          "invalid sentence length range");
  std::vector<Direction> dirs = options.directions.empty() ? all_directions(spec.codes()) : options.directions;
  std::erase_if(dirs, [&](const Direction& d) {
    return std::find(options.held_out.begin(), options.held_out.end(), d) != options.held_out.end();
  });
  for (const auto& d : dirs) {
    spec.language(d.src);
    spec.language(d.tgt);
    require(d.src != d.tgt, ErrorKind::kInvalidArgument, "pair direction must join two languages: " + d.str());
  }
  require(options.num_sentences == 0 || !dirs.empty(), ErrorKind::kInvalidArgument,
          "no directions left after removing held-out pairs");

  Rng rng(options.seed);
  const auto codes = spec.codes();
  auto draw = [&] {
    while (true) {
      const int len = options.min_length + rng.below(options.max_length - options.min_length + 1);
      std::vector<int> concepts(static_cast<std::size_t>(len));
      for (auto& c : concepts) c = rng.below(spec.concept_vocab_size());
      const bool clean = std::none_of(codes.begin(), codes.end(),
                                      [&](const auto& code) { return has_adjacent_repeat(spec.render(concepts, code)); });
      if (clean) return concepts;
    }
  };

  ToyCorpus out;
  std::set<std::vector<int>> test_set;
  while (static_cast<int>(out.test_concepts.size()) < options.num_test_sentences) {
    auto s = draw();
    if (test_set.insert(s).second) out.test_concepts.push_back(std::move(s));
  }
  out.train.reserve(static_cast<std::size_t>(options.num_sentences));
  for (int i = 0; i < options.num_sentences; ++i) {
    std::vector<int> concepts;
    do {
      concepts = draw();
    } while (test_set.contains(concepts));
    const auto& d = dirs[static_cast<std::size_t>(i) % dirs.size()];
    const std::string id = "p" + std::to_string(i);
    out.train.push_back({id, make_sequence(id + "_src", d.src, spec.render(concepts, d.src)),
                         make_sequence(id + "_tgt", d.tgt, spec.render(concepts, d.tgt))});
    out.train_concepts.push_back(std::move(concepts));
  }
  return out;
}

UnitSequence toy_translate_oracle(const ToyLanguageSpec& spec, const UnitSequence& seq, const std::string& src,
                                  const std::string& tgt) {
  const auto concepts = spec.decode(seq.units, src);
  return make_sequence(seq.utt_id, tgt, spec.render(concepts, tgt));
}

ParallelCorpus augment_bidirectional(const ParallelCorpus& corpus) {
  ParallelCorpus out;
  out.reserve(corpus.size() * 2);
  for (const auto& p : corpus) out.push_back(p);
  for (const auto& p : corpus) out.push_back({p.pair_id + "_rev", p.tgt, p.src});
  return out;
}

ParallelCorpus drop_directions(const ParallelCorpus& corpus, const std::vector<Direction>& excluded) {
  ParallelCorpus out;
  for (const auto& p : corpus) {
    if (std::find(excluded.begin(), excluded.end(), p.direction()) == excluded.end()) out.push_back(p);
  }
  return out;
}

ParallelCorpus render_pairs(const ToyLanguageSpec& spec, const std::vector<std::vector<int>>& concepts,
                            const std::vector<Direction>& directions, const std::string& id_prefix) {
  ParallelCorpus out;
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    for (const auto& d : directions) {
      const std::string id = id_prefix + std::to_string(i) + "_" + d.src + d.tgt;
      out.push_back({id, make_sequence(id + "_src", d.src, spec.render(concepts[i], d.src)),
                     make_sequence(id + "_tgt", d.tgt, spec.render(concepts[i], d.tgt))});
    }
  }
  return out;
}

std::vector<Direction> directions_of(const ParallelCorpus& corpus) {
  std::set<Direction> seen;
  for (const auto& p : corpus) seen.insert(p.direction());
  return {seen.begin(), seen.end()};
}

void write_corpus_manifest(const std::filesystem::path& path, const ParallelCorpus& corpus,
                           const std::string& config_hash) {
  auto out = io::open_text_output(path, config_hash);
  for (const auto& p : corpus) {
    out << p.pair_id << '\t' << p.src.lang << '\t' << p.tgt.lang << '\t' << io::join_ints(p.src.units) << '\t'
        << io::join_ints(p.tgt.units) << '\n';
  }
  require(out.good(), ErrorKind::kIo, "write failed: " + path.string());
}

ParallelCorpus read_corpus_manifest(const std::filesystem::path& path) {
  ParallelCorpus out;
  for (const auto& line : io::read_data_lines(path)) {
    const auto f = io::split(line, '\t');
    require(f.size() == 5, ErrorKind::kFormat, "corpus manifest line needs 5 fields: " + line);
    ParallelPair p{f[0], make_sequence(f[0] + "_src", f[1], io::parse_ints(f[3])),
                   make_sequence(f[0] + "_tgt", f[2], io::parse_ints(f[4]))};
    require(!p.src.units.empty() && !p.tgt.units.empty(), ErrorKind::kFormat, "empty side in pair " + f[0]);
    require(p.src.lang != p.tgt.lang, ErrorKind::kFormat, "pair " + f[0] + " joins a language to itself");
    p.src.deduped = !has_adjacent_repeat(p.src.units);
    p.tgt.deduped = !has_adjacent_repeat(p.tgt.units);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace ututlab
