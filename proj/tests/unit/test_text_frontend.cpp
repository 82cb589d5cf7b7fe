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

#include "doctest.h"
#include "support/oracles.hpp"
#include "ututlab/text_frontend.hpp"

using namespace ututlab;

namespace {

ToyLanguageSpec toy_spec() {
  ToyGrammarOptions g;
  g.seed = 13;
  return ToyLanguageSpec::generate(g);
}

}  // namespace

TEST_CASE("phoneme vocabulary") {
  const auto p = PhonemeVocabulary::numbered(3);
  CHECK(p.size() == 3);
  CHECK(p.id("2") == 2);
  CHECK(p.symbol(1) == "1");
  CHECK_THROWS_AS(p.id("x"), Error);
  CHECK_THROWS_AS(p.symbol(3), Error);
  CHECK_THROWS_AS(PhonemeVocabulary({"a", "a"}), Error);
  CHECK_THROWS_AS(PhonemeVocabulary::numbered(0), Error);
}

TEST_CASE("toy phonemizer inverts rendering") {
  const auto spec = toy_spec();
  const ToyPhonemizer ph(spec);
  CHECK(ph.vocabulary().size() == spec.concept_vocab_size());
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> concepts(5 + rng.below(6));
    for (auto& c : concepts) c = rng.below(spec.concept_vocab_size());
    for (const auto& lang : spec.codes()) CHECK(ph.phonemize(ph.text_of(concepts, lang), lang) == concepts);
  }
  CHECK_THROWS_WITH_AS(ph.phonemize("1 zz 2", "A"), doctest::Contains("zz"), Error);
  CHECK_THROWS_WITH_AS(ph.phonemize("   ", "A"), doctest::Contains("empty text"), Error);
  CHECK_THROWS_AS(ph.phonemize("1", "Q"), Error);
}

TEST_CASE("installing a text embedding touches only the encoder input table") {
  const auto spec = toy_spec();
  const Vocabulary units(spec.unit_vocab_size(), spec.codes());
  auto cfg = oracle::micro_config();
  const auto base = init_model(cfg, units);
  const auto phonemes = ToyPhonemizer(spec).vocabulary();
  const auto text = install_text_embedding(base, phonemes, 1);

  CHECK(text.src_vocab.size() == phonemes.size() + 3 + static_cast<int>(spec.codes().size()));
  CHECK(text.src_vocab.language_token("C") == phonemes.size() + 3 + 2);
  CHECK(text.params.src_embedding.rows() == text.src_vocab.size());
  CHECK(text.params.src_embedding.cols() == cfg.dim);
  CHECK(text.config.src_vocab_size == text.src_vocab.size());
  CHECK(text.parameter_count() == expected_parameter_count(text.config));

  std::vector<const Mat*> before, after;
  for_each_tensor(base.params, [&](const std::string&, const Mat& t) { before.push_back(&t); });
  for_each_tensor(text.params, [&](const std::string& name, const Mat& t) {
    if (name != "src_embedding") after.push_back(&t);
  });
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(*before[i] == *after[i]);

  CHECK(install_text_embedding(base, phonemes, 1).params.src_embedding == text.params.src_embedding);
  CHECK(install_text_embedding(base, phonemes, 2).params.src_embedding != text.params.src_embedding);
  Checkpoint ckpt{base, OptimizerState::zeros_for(base.params, {}), 0, {}};
  CHECK(reinit_encoder_embedding(ckpt, phonemes, 1).params.src_embedding == text.params.src_embedding);
}

TEST_CASE("text corpus construction and manifests") {
  const auto spec = toy_spec();
  const std::vector<std::vector<int>> concepts{{1, 2, 3, 4, 5, 6, 7, 8}, {9, 10, 11, 12, 13, 14, 15, 16},
                                               {3, 1, 4, 1, 5, 9, 2, 6}};
  const std::vector<Direction> dirs{{"A", "B"}, {"C", "C"}};
  const auto plain = make_text_corpus(spec, concepts, dirs, false, "u");
  CHECK(plain.size() == 3);
  const auto corpus = make_text_corpus(spec, concepts, dirs, true, "u");
  REQUIRE(corpus.size() == 5);  // the C:C pair is already a reconstruction
  CHECK(corpus[0].src.lang == "A");
  CHECK(corpus[0].tgt.lang == "B");
  CHECK(corpus[0].tgt.units == spec.render(concepts[0], "B"));
  CHECK(corpus[1].utt_id == "u0r");
  CHECK(corpus[1].tgt.units == spec.render(concepts[0], "A"));
  CHECK(corpus[2].src.lang == "C");
  CHECK(corpus[2].src.phonemes == concepts[1]);
  CHECK_THROWS_AS(make_text_corpus(spec, concepts, {}, true, "u"), Error);

  const auto dir = oracle::temp_dir("text");
  write_text_manifest(dir / "t.tsv", corpus, "cafe");
  const auto back = read_text_manifest(dir / "t.tsv");
  REQUIRE(back.size() == corpus.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].utt_id == corpus[i].utt_id);
    CHECK(back[i].src.lang == corpus[i].src.lang);
    CHECK(back[i].src.phonemes == corpus[i].src.phonemes);
    CHECK(back[i].tgt.lang == corpus[i].tgt.lang);
    CHECK(back[i].tgt.units == corpus[i].tgt.units);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("text fine-tuning") {
  const auto spec = toy_spec();
  const Vocabulary units(spec.unit_vocab_size(), spec.codes());
  const auto base = init_model(oracle::micro_config(), units);
  const auto phonemes = ToyPhonemizer(spec).vocabulary();
  const std::vector<std::vector<int>> concepts{{1, 2, 3, 4, 5, 6, 7, 8}, {9, 10, 11, 12, 13, 14, 15, 16}};
  const auto corpus = make_text_corpus(spec, concepts, {{"A", "B"}}, true, "f");

  CHECK_THROWS_AS(to_text_examples(corpus, base), Error);
  CHECK_THROWS_AS(finetune_text(base, to_examples({}, units), TrainOptions{}), Error);

  const auto text = install_text_embedding(base, phonemes, 5);
  const auto examples = to_text_examples(corpus, text);
  REQUIRE(examples.size() == 4);
  CHECK(examples[0].src.front() == text.src_vocab.language_token("A"));
  CHECK(examples[0].src[1] == concepts[0][0]);
  CHECK(examples[0].tgt.front() == text.vocab.language_token("B"));

  TrainOptions t;
  t.schedule = {3e-3, 10, 100};
  t.max_tokens = 128;
  t.deterministic = true;
  const auto r = finetune_text(text, examples, t);
  CHECK(r.step_losses.back() < r.step_losses.front());
  CHECK(r.checkpoint.model.params.src_embedding.rows() == text.src_vocab.size());
}
