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

#include "ututlab/experiment.hpp"

#include <algorithm>
#include <cstdio>

#include "ututlab/batching.hpp"
#include "ututlab/error.hpp"
#include "ututlab/io.hpp"
#include "ututlab/rng.hpp"
#include "ututlab/vocabulary.hpp"

namespace ututlab {

std::uint64_t seed_for(const RunConfig& cfg, SeedTag tag) {
  return derive_seed(static_cast<std::uint64_t>(cfg.get_int("seed")), static_cast<std::uint64_t>(tag));
}

std::vector<Direction> parse_directions(const std::string& text) {
  std::vector<Direction> out;
  for (const auto& item : io::split(text, ',')) {
    if (!item.empty()) out.push_back(Direction::parse(item));
  }
  return out;
}

ToyGrammarOptions grammar_options(const RunConfig& cfg) {
  ToyGrammarOptions g;
  g.num_languages = static_cast<int>(cfg.get_int("languages"));
  g.concept_vocab_size = static_cast<int>(cfg.get_int("concepts"));
  g.unit_vocab_size = static_cast<int>(cfg.get_int("units"));
  g.identity_permutation = cfg.get_bool("identity_permutation");
  g.reorder = cfg.get_bool("reorder");
  g.affixes = cfg.get_bool("affixes");
  g.seed = seed_for(cfg, SeedTag::kGrammar);
  return g;
}

CorpusOptions corpus_options(const RunConfig& cfg, const std::vector<std::string>& codes) {
  CorpusOptions c;
  c.num_sentences = static_cast<int>(cfg.get_int("num_sentences"));
  c.min_length = static_cast<int>(cfg.get_int("min_length"));
  c.max_length = static_cast<int>(cfg.get_int("max_length"));
  c.directions = parse_directions(cfg.get("directions"));
  c.held_out = parse_directions(cfg.get("held_out_pair"));
  c.num_test_sentences = static_cast<int>(cfg.get_int("num_test_sentences"));
  c.seed = seed_for(cfg, SeedTag::kCorpus);
  for (const auto& d : c.held_out) {
    require(std::find(codes.begin(), codes.end(), d.src) != codes.end() &&
                std::find(codes.begin(), codes.end(), d.tgt) != codes.end(),
            ErrorKind::kConfig, "held-out pair " + d.str() + " names an unknown language");
  }
  return c;
}

ModelConfig model_config(const RunConfig& cfg) {
  ModelConfig m;
  m.enc_layers = static_cast<int>(cfg.get_int("enc_layers"));
  m.dec_layers = static_cast<int>(cfg.get_int("dec_layers"));
  m.dim = static_cast<int>(cfg.get_int("dim"));
  m.heads = static_cast<int>(cfg.get_int("heads"));
  m.ffn_dim = static_cast<int>(cfg.get_int("ffn_dim"));
  m.dropout = cfg.get_double("dropout");
  m.max_positions = static_cast<int>(cfg.get_int("max_positions"));
  m.label_smoothing = cfg.get_double("label_smoothing");
  m.seed = seed_for(cfg, SeedTag::kModel);
  return m;
}

TrainOptions train_options(const RunConfig& cfg) {
  TrainOptions t;
  t.schedule.peak_lr = cfg.get_double("peak_lr");
  t.schedule.warmup_steps = cfg.get_int("warmup_steps");
  t.schedule.total_steps = cfg.get_int("total_steps");
  t.max_steps = cfg.get_int("max_steps");
  t.masking.p_m = cfg.get_double("p_m");
  t.masking.lambda = cfg.get_double("lambda");
  t.max_tokens = static_cast<int>(cfg.get_int("max_tokens"));
  t.adam.beta1 = cfg.get_double("adam_beta1");
  t.adam.beta2 = cfg.get_double("adam_beta2");
  t.adam.epsilon = cfg.get_double("adam_eps");
  t.adam.clip_norm = cfg.get_double("clip_norm");
  t.log_interval = cfg.get_int("log_interval");
  t.stop_at_accuracy = cfg.get_double("target_accuracy");
  t.deterministic = cfg.get_bool("deterministic");
  t.seed = seed_for(cfg, SeedTag::kTrain);
  return t;
}

DecodeConfig decode_config(const RunConfig& cfg) {
  DecodeConfig d;
  d.beam = static_cast<int>(cfg.get_int("beam"));
  d.length_penalty = cfg.get_double("length_penalty");
  d.max_len = static_cast<int>(cfg.get_int("max_len"));
  require(d.beam >= 1, ErrorKind::kConfig, "beam must be at least 1");
  require(d.length_penalty >= 0.0, ErrorKind::kConfig, "length_penalty must be non-negative");
  require(d.max_len >= 0, ErrorKind::kConfig, "max_len must be non-negative");
  return d;
}

ToyCorpus build_training_corpus(const ToyLanguageSpec& spec, const RunConfig& cfg) {
  const auto options = corpus_options(cfg, spec.codes());
  ToyCorpus corpus = generate_toy_corpus(spec, options);
  if (cfg.get_bool("bidirectional")) {
    std::vector<std::vector<int>> concepts;
    for (const auto& c : corpus.train_concepts) {
      concepts.push_back(c);
      concepts.push_back(c);
    }
    corpus.train = augment_bidirectional(corpus.train);
    corpus.train_concepts = std::move(concepts);
    if (!options.held_out.empty()) {
      ParallelCorpus kept;
      std::vector<std::vector<int>> kept_concepts;
      for (std::size_t i = 0; i < corpus.train.size(); ++i) {
        const auto d = corpus.train[i].direction();
        if (std::find(options.held_out.begin(), options.held_out.end(), d) == options.held_out.end()) {
          kept.push_back(corpus.train[i]);
          kept_concepts.push_back(corpus.train_concepts[i]);
        }
      }
      corpus.train = std::move(kept);
      corpus.train_concepts = std::move(kept_concepts);
    }
  }
  return corpus;
}

std::vector<MaskingAblationRow> ablate_masking(const ToyLanguageSpec& spec, const ToyCorpus& corpus,
                                               const RunConfig& cfg, const std::vector<double>& ratios) {
  require(!ratios.empty(), ErrorKind::kInvalidArgument, "no masking ratios given");
  const Vocabulary vocab(spec.unit_vocab_size(), spec.codes());
  const auto examples = to_examples(corpus.train, vocab);
  const auto trained = directions_of(corpus.train);
  const auto directions = all_directions(spec.codes());
  const auto decode = decode_config(cfg);
  std::vector<MaskingAblationRow> rows;
  for (double p : ratios) {
    auto options = train_options(cfg);
    options.masking.p_m = p;
    const auto result = train(init_model(model_config(cfg), vocab), examples, options);
    MaskingAblationRow row;
    row.p_m = p;
    row.grid = evaluate_translation(result.checkpoint.model, spec, corpus.test_concepts, directions, trained, decode);
    row.final_loss = result.metrics.empty() ? 0.0 : result.metrics.back().loss;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_csv(const std::filesystem::path& path, const std::vector<MaskingAblationRow>& rows,
                        const std::string& config_hash) {
  auto out = io::open_text_output(path, config_hash);
  out << "p_m,bleu,bleu_seen,bleu_unseen,final_loss\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.2f,%.4f,%.4f,%.4f,%.6f\n", r.p_m, r.grid.macro_average, r.grid.macro_seen,
                  r.grid.macro_unseen, r.final_loss);
    out << buf;
  }
  require(out.good(), ErrorKind::kIo, "write failed: " + path.string());
}

}  // namespace ututlab
