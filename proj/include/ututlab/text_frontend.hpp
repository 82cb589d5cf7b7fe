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

// Text inputs for a trained unit model: phoneme vocabulary, phonemizers,
// encoder-embedding surgery and the fine-tuning entry point.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ututlab/batching.hpp"
#include "ututlab/corpus.hpp"
#include "ututlab/model.hpp"
#include "ututlab/toy_language.hpp"
#include "ututlab/training.hpp"

namespace ututlab {

class PhonemeVocabulary {
 public:
  PhonemeVocabulary() = default;
  explicit PhonemeVocabulary(std::vector<std::string> symbols);

  // Symbols "0" .. "n-1"; the toy phoneme inventory is the concept alphabet.
  static PhonemeVocabulary numbered(int n);

  int size() const { return static_cast<int>(symbols_.size()); }
  int id(const std::string& symbol) const;
  const std::string& symbol(int id) const;
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, int> ids_;
};

struct TextUtterance {
  std::string utt_id;
  std::string lang;
  std::vector<int> phonemes;
};

class Phonemizer {
 public:
  virtual ~Phonemizer() = default;
  virtual std::vector<int> phonemize(const std::string& text, const std::string& lang) const = 0;
};

// Toy text is the space-separated unit ids of a language's rendering; its
// phonemes are the concept ids it decodes to.
class ToyPhonemizer final : public Phonemizer {
 public:
  explicit ToyPhonemizer(ToyLanguageSpec spec) : spec_(std::move(spec)) {}

  std::vector<int> phonemize(const std::string& text, const std::string& lang) const override;
  std::string text_of(const std::vector<int>& concepts, const std::string& lang) const;
  PhonemeVocabulary vocabulary() const { return PhonemeVocabulary::numbered(spec_.concept_vocab_size()); }

 private:
  ToyLanguageSpec spec_;
};

// Encoder token space for text inputs: phonemes, then the specials, then the
// same language tokens as the unit vocabulary.
Vocabulary text_vocabulary(const PhonemeVocabulary& phonemes, const Vocabulary& unit_vocab);

// Replaces only the encoder input embedding with a fresh
// (P + specials + languages) x dim table drawn from `seed`.
ModelState install_text_embedding(ModelState model, const PhonemeVocabulary& phonemes, std::uint64_t seed);
ModelState reinit_encoder_embedding(const Checkpoint& ckpt, const PhonemeVocabulary& phonemes, std::uint64_t seed);

struct TextPair {
  std::string utt_id;
  TextUtterance src;
  UnitSequence tgt;
};

using TextCorpus = std::vector<TextPair>;

// One text-to-unit pair per direction pair, plus a same-language
// reconstruction pair (source text to its own units) for each when
// `reconstruction` is set.
TextCorpus make_text_corpus(const ToyLanguageSpec& spec, const std::vector<std::vector<int>>& concepts,
                            const std::vector<Direction>& directions, bool reconstruction, const std::string& id_prefix);

std::vector<TrainingExample> to_text_examples(const TextCorpus& corpus, const ModelState& model);

void write_text_manifest(const std::filesystem::path& path, const TextCorpus& corpus,
                         const std::string& config_hash = {});
TextCorpus read_text_manifest(const std::filesystem::path& path);

// Same loop as train() with text ids on the encoder side. The model must
// carry a text embedding.
TrainResult finetune_text(ModelState model, const std::vector<TrainingExample>& examples, const TrainOptions& options,
                          const EvalHook& eval_hook = {});

}  // namespace ututlab
