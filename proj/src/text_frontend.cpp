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

#include "ututlab/text_frontend.hpp"

#include <charconv>
#include <cmath>

#include "ututlab/error.hpp"
#include "ututlab/io.hpp"
#include "ututlab/rng.hpp"

namespace ututlab {

PhonemeVocabulary::PhonemeVocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  require(!symbols_.empty(), ErrorKind::kInvalidArgument, "phoneme vocabulary is empty");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    require(ids_.emplace(symbols_[i], static_cast<int>(i)).second, ErrorKind::kInvalidArgument,
            "duplicate phoneme symbol " + symbols_[i]);
  }
}

PhonemeVocabulary PhonemeVocabulary::numbered(int n) {
  require(n >= 1, ErrorKind::kInvalidArgument, "phoneme vocabulary needs at least one symbol");
  std::vector<std::string> s;
  for (int i = 0; i < n; ++i) s.push_back(std::to_string(i));
  return PhonemeVocabulary(std::move(s));
}

int PhonemeVocabulary::id(const std::string& symbol) const {
  const auto it = ids_.find(symbol);
  require(it != ids_.end(), ErrorKind::kInvalidArgument, "unknown phoneme symbol " + symbol);
  return it->second;
}

const std::string& PhonemeVocabulary::symbol(int id) const {
  require(id >= 0 && id < size(), ErrorKind::kInvalidArgument, "phoneme id " + std::to_string(id) + " out of range");
  return symbols_[static_cast<std::size_t>(id)];
}

std::vector<int> ToyPhonemizer::phonemize(const std::string& text, const std::string& lang) const {
  const auto& language = spec_.language(lang);
  std::vector<bool> alphabet(static_cast<std::size_t>(spec_.unit_vocab_size()), false);
  for (int u : language.permutation) alphabet[static_cast<std::size_t>(u)] = true;
  for (int u : language.prefix) alphabet[static_cast<std::size_t>(u)] = true;
  for (int u : language.suffix) alphabet[static_cast<std::size_t>(u)] = true;

  std::vector<int> units;
  std::string unknown;
  for (const auto& token : io::split(text, ' ')) {
    if (token.empty()) continue;
    int value = -1;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    const bool ok = ec == std::errc{} && end == token.data() + token.size() && value >= 0 &&
                    value < spec_.unit_vocab_size() && alphabet[static_cast<std::size_t>(value)];
    if (!ok) {
      unknown += (unknown.empty() ? "" : ", ") + token;
    } else {
      units.push_back(value);
    }
  }
  require(unknown.empty(), ErrorKind::kInvalidArgument, "unknown symbols for language " + lang + ": " + unknown);
  require(!units.empty(), ErrorKind::kInvalidArgument, "empty text for language " + lang);
  return spec_.decode(units, lang);
}

std::string ToyPhonemizer::text_of(const std::vector<int>& concepts, const std::string& lang) const {
  return io::join_ints(spec_.render(concepts, lang));
}

Vocabulary text_vocabulary(const PhonemeVocabulary& phonemes, const Vocabulary& unit_vocab) {
  return Vocabulary(phonemes.size(), unit_vocab.languages());
}

ModelState install_text_embedding(ModelState model, const PhonemeVocabulary& phonemes, std::uint64_t seed) {
  model.src_vocab = text_vocabulary(phonemes, model.vocab);
  model.config.src_vocab_size = model.src_vocab.size();
  Rng rng(derive_seed(seed, 0x7e47));
  const double sd = 1.0 / std::sqrt(static_cast<double>(model.config.dim));
  Mat table(model.src_vocab.size(), model.config.dim);
  for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = sd * rng.normal();
  model.params.src_embedding = std::move(table);
  return model;
}

ModelState reinit_encoder_embedding(const Checkpoint& ckpt, const PhonemeVocabulary& phonemes, std::uint64_t seed) {
  return install_text_embedding(ckpt.model, phonemes, seed);
}

TextCorpus make_text_corpus(const ToyLanguageSpec& spec, const std::vector<std::vector<int>>& concepts,
                            const std::vector<Direction>& directions, bool reconstruction,
                            const std::string& id_prefix) {
  require(!directions.empty(), ErrorKind::kInvalidArgument, "text corpus needs at least one direction");
  TextCorpus out;
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    const auto& d = directions[i % directions.size()];
    const std::string id = id_prefix + std::to_string(i);
    const TextUtterance text{id + "_text", d.src, concepts[i]};
    out.push_back({id, text, UnitSequence{id + "_tgt", d.tgt, spec.render(concepts[i], d.tgt), true}});
    if (reconstruction && d.src != d.tgt) {
      out.push_back({id + "r", text, UnitSequence{id + "r_tgt", d.src, spec.render(concepts[i], d.src), true}});
    }
  }
  return out;
}

std::vector<TrainingExample> to_text_examples(const TextCorpus& corpus, const ModelState& model) {
  require(!corpus.empty(), ErrorKind::kInvalidArgument, "text corpus is empty");
  require(model.params.src_embedding.size() > 0, ErrorKind::kInvalidArgument,
          "model has no text embedding; install one first");
  std::vector<TrainingExample> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus) {
    out.push_back(make_example(p.utt_id, p.src.lang, p.src.phonemes, model.src_vocab, p.tgt.lang, p.tgt.units,
                               model.vocab));
  }
  return out;
}

void write_text_manifest(const std::filesystem::path& path, const TextCorpus& corpus, const std::string& config_hash) {
  auto out = io::open_text_output(path, config_hash);
  for (const auto& p : corpus) {
    out << p.utt_id << '\t' << p.src.lang << '\t' << io::join_ints(p.src.phonemes) << '\t' << p.tgt.lang << '\t'
        << io::join_ints(p.tgt.units) << '\n';
  }
  require(out.good(), ErrorKind::kIo, "write failed: " + path.string());
}

TextCorpus read_text_manifest(const std::filesystem::path& path) {
  TextCorpus out;
  for (const auto& line : io::read_data_lines(path)) {
    const auto f = io::split(line, '\t');
    require(f.size() == 5, ErrorKind::kFormat, "text manifest line needs 5 fields: " + line);
    TextPair p{f[0], TextUtterance{f[0] + "_text", f[1], io::parse_ints(f[2])},
               UnitSequence{f[0] + "_tgt", f[3], io::parse_ints(f[4]), true}};
    require(!p.src.phonemes.empty() && !p.tgt.units.empty(), ErrorKind::kFormat, "empty side in text pair " + f[0]);
    out.push_back(std::move(p));
  }
  return out;
}

TrainResult finetune_text(ModelState model, const std::vector<TrainingExample>& examples, const TrainOptions& options,
                          const EvalHook& eval_hook) {
  require(model.params.src_embedding.size() > 0, ErrorKind::kInvalidArgument,
          "model has no text embedding; install one first");
  require(!examples.empty(), ErrorKind::kInvalidArgument, "text corpus is empty");
  return train(std::move(model), examples, options, eval_hook);
}

}  // namespace ututlab
