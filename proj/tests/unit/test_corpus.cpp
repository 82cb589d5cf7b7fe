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

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "doctest.h"
#include "support/oracles.hpp"
#include "ututlab/batching.hpp"
#include "ututlab/corpus.hpp"
#include "ututlab/error.hpp"
#include "ututlab/toy_language.hpp"

using namespace ututlab;

namespace {

ToyLanguageSpec family(std::uint64_t seed = 11) {
  ToyGrammarOptions g;
  g.seed = seed;
  return ToyLanguageSpec::generate(g);
}

std::vector<int> random_concepts(Rng& rng, int c, int len) {
  std::vector<int> s;
  for (int i = 0; i < len; ++i) s.push_back(rng.below(c));
  return s;
}

TrainingExample fixed_example(const std::string& id, int len, const Vocabulary& v) {
  std::vector<int> u(static_cast<std::size_t>(len));
  std::iota(u.begin(), u.end(), 0);
  return make_example(id, "A", u, v, "B", u, v);
}

}  // namespace

TEST_CASE("identity languages translate to themselves") {
  ToyGrammarOptions g;
  g.num_languages = 2;
  g.identity_permutation = true;
  g.reorder = false;
  g.affixes = false;
  const auto spec = ToyLanguageSpec::generate(g);
  CorpusOptions o;
  o.num_sentences = 50;
  o.num_test_sentences = 5;
  const auto corpus = generate_toy_corpus(spec, o);
  REQUIRE(corpus.train.size() == 50);
  for (const auto& p : corpus.train) CHECK(p.src.units == p.tgt.units);
}

TEST_CASE("the oracle is bijective and composes through concepts") {
  const auto spec = family();
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto s = random_concepts(rng, spec.concept_vocab_size(), 8 + rng.below(7));
    const UnitSequence a{"x", "A", spec.render(s, "A"), true};
    const auto ab = toy_translate_oracle(spec, a, "A", "B");
    CHECK(toy_translate_oracle(spec, ab, "B", "A") == a);
    CHECK(toy_translate_oracle(spec, ab, "B", "C").units == toy_translate_oracle(spec, a, "A", "C").units);
    CHECK(toy_translate_oracle(spec, a, "A", "A").units == a.units);
    CHECK(spec.decode(a.units, "A") == s);
  }
}

TEST_CASE("a target-only affix is not a valid source sentence") {
  const auto spec = family();
  const auto& b = spec.language("B");
  std::vector<int> units = spec.render({1, 2, 3, 4, 5, 6, 7, 8}, "A");
  units[3] = b.prefix.front();
  CHECK_THROWS_WITH_AS(spec.decode(units, "A"), doctest::Contains("not a valid A-language sentence"), Error);
}

TEST_CASE("affixes may not collide with content units") {
  const auto spec = family();
  auto langs = spec.languages();
  langs[0].prefix = {langs[0].permutation[5]};
  CHECK_THROWS_WITH_AS(ToyLanguageSpec(spec.concept_vocab_size(), spec.unit_vocab_size(), 0, langs),
                       doctest::Contains("affix collision"), Error);
}

TEST_CASE("reordering is self-inverse") {
  Rng rng(8);
  for (auto rule : {ReorderRule::kNone, ReorderRule::kEvenSum, ReorderRule::kOddSum}) {
    for (int t = 0; t < 50; ++t) {
      const auto s = random_concepts(rng, 48, 1 + rng.below(15));
      CHECK(apply_reorder(apply_reorder(s, rule), rule) == s);
    }
  }
  CHECK(apply_reorder({1, 3, 2, 2, 5}, ReorderRule::kEvenSum) == std::vector<int>{3, 1, 2, 2, 5});
  CHECK(apply_reorder({1, 2, 4, 6, 5}, ReorderRule::kOddSum) == std::vector<int>{2, 1, 4, 6, 5});
}

TEST_CASE("corpus generation honours held-out pairs and covers both languages") {
  const auto spec = family();
  CorpusOptions o;
  o.num_sentences = 600;
  o.held_out = {Direction::parse("A:B")};
  o.num_test_sentences = 20;
  o.seed = 4;
  const auto corpus = generate_toy_corpus(spec, o);
  const auto dirs = directions_of(corpus.train);
  CHECK(dirs.size() == 11);
  CHECK(std::find(dirs.begin(), dirs.end(), Direction::parse("A:B")) == dirs.end());
  bool a_src = false, b_tgt = false;
  for (const auto& d : dirs) {
    a_src |= d.src == "A";
    b_tgt |= d.tgt == "B";
  }
  CHECK(a_src);
  CHECK(b_tgt);

  // no adjacent duplicates, concepts recoverable, test sentences disjoint
  std::set<std::vector<int>> train_set(corpus.train_concepts.begin(), corpus.train_concepts.end());
  for (std::size_t i = 0; i < corpus.train.size(); ++i) {
    const auto& p = corpus.train[i];
    CHECK(p.src.lang != p.tgt.lang);
    for (const auto* side : {&p.src, &p.tgt}) {
      CHECK(side->deduped);
      CHECK(std::adjacent_find(side->units.begin(), side->units.end()) == side->units.end());
    }
    CHECK(spec.decode(p.src.units, p.src.lang) == corpus.train_concepts[i]);
    CHECK(toy_translate_oracle(spec, p.src, p.src.lang, p.tgt.lang).units == p.tgt.units);
  }
  for (const auto& t : corpus.test_concepts) CHECK(train_set.count(t) == 0);

  const auto again = generate_toy_corpus(spec, o);
  CHECK(again.train == corpus.train);
}

TEST_CASE("bidirectional augmentation doubles the corpus") {
  const ParallelPair p{"p", UnitSequence{"s", "A", {1, 2}, true}, UnitSequence{"t", "B", {3}, true}};
  const auto once = augment_bidirectional({p});
  REQUIRE(once.size() == 2);
  CHECK(once[1].direction() == Direction{"B", "A"});
  CHECK(once[1].src.units == p.tgt.units);
  CHECK(augment_bidirectional({}).empty());
  CHECK(augment_bidirectional(once).size() == 4);
}

TEST_CASE("token-budget batching") {
  const Vocabulary v(20, {"A", "B"});

  SUBCASE("three rows of length ten with budget 24 pack as 2 + 1") {
    const std::vector<TrainingExample> ex{fixed_example("a", 10, v), fixed_example("b", 10, v),
                                          fixed_example("c", 10, v)};
    const auto batches = make_batches(ex, BatchingOptions{24, 1, true}, v.pad(), v.pad());
    std::multiset<int> sizes;
    for (const auto& b : batches) sizes.insert(b.rows());
    CHECK(sizes == std::multiset<int>{1, 2});
  }
  SUBCASE("an oversized row names the pair") {
    const std::vector<TrainingExample> ex{fixed_example("too_long", 10, v)};
    CHECK_THROWS_WITH_AS(make_batches(ex, BatchingOptions{8, 1, true}, v.pad(), v.pad()),
                         doctest::Contains("too_long"), Error);
  }
  SUBCASE("budget, coverage, alignment and determinism") {
    Rng rng(6);
    std::vector<TrainingExample> ex;
    for (int i = 0; i < 300; ++i) {
      ex.push_back(make_example("p" + std::to_string(i), "A", oracle::random_units(rng, 20, 1, 15), v, "B",
                                oracle::random_units(rng, 20, 1, 15), v));
    }
    for (bool sort : {true, false}) {
      const auto batches = make_batches(ex, BatchingOptions{64, 9, sort}, v.pad(), v.pad());
      std::multiset<std::string> seen;
      for (const auto& b : batches) {
        long long src = 0, tgt = 0;
        for (int r = 0; r < b.rows(); ++r) {
          seen.insert(b.ids[static_cast<std::size_t>(r)]);
          const auto in = b.tgt_input_row(r);
          const auto out = b.tgt_output_row(r);
          REQUIRE(in.size() == out.size());
          CHECK(std::equal(in.begin() + 1, in.end(), out.begin()));
          src += static_cast<long long>(b.src_row(r).size());
          tgt += static_cast<long long>(in.size()) + 1;
        }
        CHECK(src <= 64);
        CHECK(tgt <= 64);
      }
      std::multiset<std::string> all;
      for (const auto& e : ex) all.insert(e.id);
      CHECK(seen == all);
      const auto again = make_batches(ex, BatchingOptions{64, 9, sort}, v.pad(), v.pad());
      REQUIRE(again.size() == batches.size());
      for (std::size_t i = 0; i < batches.size(); ++i) CHECK(again[i].ids == batches[i].ids);
    }
  }
}

TEST_CASE("manifests and language specs round trip") {
  const auto dir = oracle::temp_dir("corpus_io");
  const auto spec = family(5);
  spec.save(dir / "langs.txt", "feedbeef");
  const auto loaded = ToyLanguageSpec::load(dir / "langs.txt");
  CHECK(loaded.codes() == spec.codes());
  const std::vector<int> s{1, 2, 3, 4, 5, 6, 7, 8, 9};
  for (const auto& c : spec.codes()) CHECK(loaded.render(s, c) == spec.render(s, c));

  CorpusOptions o;
  o.num_sentences = 30;
  o.num_test_sentences = 2;
  const auto corpus = generate_toy_corpus(spec, o);
  write_corpus_manifest(dir / "c.tsv", corpus.train, "feedbeef");
  CHECK(read_corpus_manifest(dir / "c.tsv") == corpus.train);
  std::filesystem::remove_all(dir);
}
