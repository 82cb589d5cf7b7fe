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

// Command-line front end. Every subcommand reads a RunConfig (defaults, then
// --config FILE, then per-key flags, then UTUTLAB_DETERMINISTIC), writes the
// resolved config next to its outputs and stamps text outputs with its hash.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ututlab/codec.hpp"
#include "ututlab/corpus.hpp"
#include "ututlab/error.hpp"
#include "ututlab/evaluation.hpp"
#include "ututlab/experiment.hpp"
#include "ututlab/feature_source.hpp"
#include "ututlab/generation.hpp"
#include "ututlab/io.hpp"
#include "ututlab/run_config.hpp"
#include "ututlab/text_frontend.hpp"
#include "ututlab/toy_language.hpp"
#include "ututlab/training.hpp"
#include "ututlab/vocabulary.hpp"

namespace fs = std::filesystem;
using namespace ututlab;

namespace {

constexpr int kExitUsage = 2;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kIo: return 3;
    case ErrorKind::kFormat: return 4;
    case ErrorKind::kBudget: return 5;
    case ErrorKind::kNumeric: return 6;
    case ErrorKind::kInvalidArgument: return 7;
  }
  return 1;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

void report(const std::string& kind, int code, const std::string& message) {
  std::fprintf(stderr, "error kind=%s code=%d message=\"%s\"\n", kind.c_str(), code, escape(message).c_str());
}

// Config layering shared by every subcommand.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig() : RunConfig::load(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    if (const char* env = std::getenv("UTUTLAB_DETERMINISTIC"); env != nullptr && std::string(env) == "1") {
      cfg.set("deterministic", "true");
    }
    return cfg;
  }
};

void add_config_flags(CLI::App* app, ConfigFlags& flags) {
  app->add_option("--config", flags.config_path, "RunConfig file (ututlab-config 1)")->check(CLI::ExistingFile);
  for (const auto& key : RunConfig::keys()) {
    std::string dashed = key;
    for (auto& c : dashed) c = c == '_' ? '-' : c;
    app->add_option_function<std::string>(
           "--" + dashed, [&flags, key](const std::string& v) { flags.overrides[key] = v; },
           "config key " + key + " (default " + RunConfig().get(key) + ")")
        ->group("Config keys");
  }
}

fs::path prepare_out_dir(const RunConfig& cfg, const std::string& command) {
  const fs::path dir = cfg.get("out_dir");
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::kIo, "cannot create output directory " + dir.string() + ": " + ec.message());
  cfg.save(dir / (command + ".run_config.txt"));
  return dir;
}

void require_file(const std::string& path, const std::string& what) {
  require(!path.empty(), ErrorKind::kConfig, "missing --" + what);
  require(fs::exists(path), ErrorKind::kIo, what + " not found: " + path);
}

std::vector<std::string> language_codes(const RunConfig& cfg) {
  std::vector<std::string> codes;
  for (long long i = 0; i < cfg.get_int("languages"); ++i) codes.push_back(std::string(1, static_cast<char>('A' + i)));
  return codes;
}

ToyLanguageSpec languages_from(const RunConfig& cfg, const std::string& path) {
  return path.empty() ? ToyLanguageSpec::generate(grammar_options(cfg)) : ToyLanguageSpec::load(path);
}

SyntheticFeatureSource feature_source(const RunConfig& cfg) {
  SyntheticFeatureOptions o;
  o.num_units = static_cast<int>(cfg.get_int("units"));
  o.dim = static_cast<int>(cfg.get_int("feature_dim"));
  o.noise = cfg.get_double("feature_noise");
  o.seed = seed_for(cfg, SeedTag::kFeatures);
  return SyntheticFeatureSource(o);
}

// Feature streams for the source side of every pair in a corpus manifest.
std::vector<FeatureStream> render_corpus_features(const RunConfig& cfg, const std::string& corpus_path,
                                                  std::vector<std::vector<int>>* positions = nullptr) {
  const auto corpus = read_corpus_manifest(corpus_path);
  const auto source = feature_source(cfg);
  Rng rng(derive_seed(seed_for(cfg, SeedTag::kFeatures), 1));
  std::vector<FeatureStream> out;
  for (const auto& pair : corpus) {
    auto rendered = source.render(pair.src, rng);
    out.push_back(std::move(rendered.stream));
    if (positions != nullptr) positions->push_back(std::move(rendered.frame_position));
  }
  return out;
}

void print_grid(const BleuGrid& grid) {
  for (const auto& e : grid.entries) {
    std::printf("%s -> %s  bleu %7.2f  %s\n", e.direction.src.c_str(), e.direction.tgt.c_str(), e.report.score,
                e.seen ? "seen" : "unseen");
  }
  std::printf("macro %.2f (seen %.2f, unseen %.2f)\n", grid.macro_average, grid.macro_seen, grid.macro_unseen);
}

std::vector<TrainingExample> unit_examples(const std::string& path, const Vocabulary& vocab) {
  return to_examples(read_corpus_manifest(path), vocab);
}

ParallelCorpus text_as_pairs(const TextCorpus& text) {
  ParallelCorpus out;
  for (const auto& p : text) {
    out.push_back({p.utt_id, UnitSequence{p.src.utt_id, p.src.lang, p.src.phonemes, false}, p.tgt});
  }
  return out;
}

EvalHook accuracy_hook(const std::vector<TrainingExample>& valid) {
  if (valid.empty()) return {};
  return [&valid](const ModelState& m, long long step) -> std::optional<double> {
    const double acc = token_accuracy(m, valid);
    std::fprintf(stderr, "step %lld val_token_acc %.4f\n", step, acc);
    return acc;
  };
}

// ----------------------------------------------------------- subcommands

int cmd_gen_corpus(const RunConfig& cfg) {
  const auto dir = prepare_out_dir(cfg, "gen-corpus");
  const auto hash = cfg.hash();
  const auto spec = ToyLanguageSpec::generate(grammar_options(cfg));
  const auto corpus = build_training_corpus(spec, cfg);
  const auto all = all_directions(spec.codes());
  spec.save(dir / "languages.txt", hash);
  write_corpus_manifest(dir / "train.tsv", corpus.train, hash);
  write_corpus_manifest(dir / "test.tsv", render_pairs(spec, corpus.test_concepts, all, "test"), hash);
  write_text_manifest(dir / "text_train.tsv",
                      make_text_corpus(spec, corpus.train_concepts, directions_of(corpus.train), true, "text"), hash);
  write_text_manifest(dir / "text_test.tsv", make_text_corpus(spec, corpus.test_concepts, all, true, "ttest"), hash);
  std::printf("wrote %zu training pairs, %zu test sentences to %s\n", corpus.train.size(),
              corpus.test_concepts.size(), dir.string().c_str());
  return 0;
}

int cmd_fit_codebook(const RunConfig& cfg, const std::vector<std::string>& feature_files, const std::string& corpus) {
  const auto dir = prepare_out_dir(cfg, "fit-codebook");
  std::vector<FeatureStream> streams;
  if (!feature_files.empty()) {
    for (const auto& f : feature_files) streams.push_back(load_features(f));
  } else {
    require_file(corpus, "corpus");
    streams = render_corpus_features(cfg, corpus);
  }
  KMeansOptions o;
  o.k = static_cast<int>(cfg.get_int("clusters"));
  o.max_iters = static_cast<int>(cfg.get_int("kmeans_iters"));
  o.tol = cfg.get_double("kmeans_tol");
  o.seed = seed_for(cfg, SeedTag::kCodebook);
  const auto codebook = fit_codebook(stack_frames(streams), o);
  save_codebook(dir / "codebook.bin", codebook);
  auto out = io::open_text_output(dir / "kmeans.csv", cfg.hash());
  out << "iteration,sse\n";
  for (std::size_t i = 0; i < codebook.fit_stats.sse_history.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, codebook.fit_stats.sse_history[i]);
    out << buf;
  }
  std::printf("k=%d iterations=%d sse=%.6g\n", codebook.k(), codebook.fit_stats.iterations,
              codebook.fit_stats.final_sse);
  return 0;
}

int cmd_quantize(const RunConfig& cfg, const std::string& codebook_path, const std::vector<std::string>& feature_files,
                 const std::string& corpus) {
  require_file(codebook_path, "codebook");
  const auto dir = prepare_out_dir(cfg, "quantize");
  const auto codebook = load_codebook(codebook_path);
  std::vector<FeatureStream> streams;
  if (!feature_files.empty()) {
    for (const auto& f : feature_files) streams.push_back(load_features(f));
  } else {
    require_file(corpus, "corpus");
    streams = render_corpus_features(cfg, corpus);
  }
  std::vector<UnitSequence> units;
  for (const auto& s : streams) units.push_back(deduplicate(quantize(s, codebook)));
  write_unit_manifest(dir / "units.tsv", units, cfg.hash());
  std::printf("quantized %zu streams\n", units.size());
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& corpus, const std::string& valid, const std::string& resume) {
  require_file(corpus, "corpus");
  const auto dir = prepare_out_dir(cfg, "train");
  const Vocabulary vocab(static_cast<int>(cfg.get_int("units")), language_codes(cfg));
  const auto examples = unit_examples(corpus, vocab);
  std::vector<TrainingExample> valid_examples;
  if (!valid.empty()) {
    require_file(valid, "valid");
    valid_examples = unit_examples(valid, vocab);
  }
  const auto options = train_options(cfg);
  TrainResult result;
  try {
    if (!resume.empty()) {
      require_file(resume, "resume");
      result = resume_training(load_checkpoint(resume), examples, options, accuracy_hook(valid_examples));
    } else {
      result = train(init_model(model_config(cfg), vocab), examples, options, accuracy_hook(valid_examples));
    }
  } catch (const DivergenceError& e) {
    save_checkpoint(dir / "last_good.bin", e.last_good());
    throw;
  }
  save_checkpoint(dir / "checkpoint.bin", result.checkpoint);
  write_metrics_csv(dir / "metrics.csv", result.metrics, cfg.hash());
  std::printf("trained %lld steps, final interval loss %.6f\n", result.checkpoint.step,
              result.metrics.empty() ? 0.0 : result.metrics.back().loss);
  return 0;
}

int cmd_finetune_text(const RunConfig& cfg, const std::string& checkpoint, const std::string& text_corpus,
                      const std::string& valid, bool from_scratch) {
  require_file(text_corpus, "text-corpus");
  const auto dir = prepare_out_dir(cfg, "finetune-text");
  const auto phonemes = PhonemeVocabulary::numbered(static_cast<int>(cfg.get_int("concepts")));
  ModelState model;
  if (from_scratch) {
    const Vocabulary vocab(static_cast<int>(cfg.get_int("units")), language_codes(cfg));
    model = install_text_embedding(init_model(model_config(cfg), vocab), phonemes,
                                   seed_for(cfg, SeedTag::kTextEmbedding));
  } else {
    require_file(checkpoint, "checkpoint");
    model = reinit_encoder_embedding(load_checkpoint(checkpoint), phonemes, seed_for(cfg, SeedTag::kTextEmbedding));
  }
  const auto examples = to_text_examples(read_text_manifest(text_corpus), model);
  std::vector<TrainingExample> valid_examples;
  if (!valid.empty()) {
    require_file(valid, "valid");
    valid_examples = to_text_examples(read_text_manifest(valid), model);
  }
  const auto result = finetune_text(model, examples, train_options(cfg), accuracy_hook(valid_examples));
  save_checkpoint(dir / "checkpoint.bin", result.checkpoint);
  write_metrics_csv(dir / "metrics.csv", result.metrics, cfg.hash());
  std::printf("fine-tuned %lld steps\n", result.checkpoint.step);
  return 0;
}

// Unit manifest rows, or the source side of a parallel (or text) manifest.
std::vector<UnitSequence> read_sources(const std::filesystem::path& path, bool text_model) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line) && (line.empty() || line[0] == '#')) {
  }
  if (io::split(line, '\t').size() != 5) return read_unit_manifest(path);
  std::vector<UnitSequence> out;
  if (text_model) {
    for (const auto& pair : read_text_manifest(path)) {
      out.push_back(UnitSequence{pair.utt_id, pair.src.lang, pair.src.phonemes, false});
    }
    return out;
  }
  for (const auto& pair : read_corpus_manifest(path)) {
    out.push_back(pair.src);
    out.back().utt_id = pair.pair_id;
  }
  return out;
}

int cmd_translate(const RunConfig& cfg, const std::string& checkpoint, const std::string& input,
                  const std::string& tgt_lang, bool greedy) {
  require_file(checkpoint, "checkpoint");
  require_file(input, "input");
  require(!tgt_lang.empty(), ErrorKind::kConfig, "missing --tgt-lang");
  const auto dir = prepare_out_dir(cfg, "translate");
  const auto model = load_checkpoint(checkpoint).model;
  auto decode = decode_config(cfg);
  if (greedy) {
    decode.beam = 1;
    decode.length_penalty = 0.0;
  }
  std::vector<UnitSequence> out;
  long long truncated = 0;
  for (const auto& seq : read_sources(input, model.params.src_embedding.size() > 0)) {
    auto result = translate(model, seq.lang, seq.units, tgt_lang, decode);
    result.output.utt_id = seq.utt_id;
    truncated += result.truncated ? 1 : 0;
    out.push_back(std::move(result.output));
  }
  write_unit_manifest(dir / "translations.tsv", out, cfg.hash());
  std::printf("translated %zu utterances (%lld truncated)\n", out.size(), truncated);
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint, const std::string& test,
                 const std::string& train_corpus) {
  require_file(checkpoint, "checkpoint");
  require_file(test, "test");
  const auto dir = prepare_out_dir(cfg, "evaluate");
  const auto model = load_checkpoint(checkpoint).model;
  const bool text_model = model.params.src_embedding.size() > 0;
  const ParallelCorpus pairs = text_model ? text_as_pairs(read_text_manifest(test)) : read_corpus_manifest(test);
  std::vector<Direction> trained;
  if (!train_corpus.empty()) {
    require_file(train_corpus, "train");
    trained = text_model ? directions_of(text_as_pairs(read_text_manifest(train_corpus)))
                         : directions_of(read_corpus_manifest(train_corpus));
  }
  const auto grid = evaluate_translation(model, pairs, trained, decode_config(cfg));
  write_bleu_grid_csv(dir / "bleu_grid.csv", grid, cfg.hash());
  print_grid(grid);
  return 0;
}

int cmd_inspect_units(const RunConfig& cfg, const std::string& languages, const std::string& codebook_path) {
  const auto dir = prepare_out_dir(cfg, "inspect-units");
  const auto spec = languages_from(cfg, languages);
  auto corpus_cfg = cfg;
  corpus_cfg.set("held_out_pair", "");
  corpus_cfg.set("directions", "");
  corpus_cfg.set("bidirectional", "false");
  const auto corpus = build_training_corpus(spec, corpus_cfg);
  const auto source = feature_source(cfg);
  Rng rng(derive_seed(seed_for(cfg, SeedTag::kFeatures), 2));

  // Frames of every test sentence in every language, each labelled with the
  // concept it was rendered from.
  std::vector<FeatureStream> streams;
  std::vector<std::vector<int>> labels;
  for (const auto& concepts : corpus.test_concepts) {
    for (const auto& code : spec.codes()) {
      const UnitSequence seq{"", code, spec.render(concepts, code), true};
      const auto alignment = spec.render_alignment(concepts, code);
      auto rendered = source.render(seq, rng);
      std::vector<int> frame_labels;
      for (int pos : rendered.frame_position) frame_labels.push_back(alignment[static_cast<std::size_t>(pos)]);
      streams.push_back(std::move(rendered.stream));
      labels.push_back(std::move(frame_labels));
    }
  }
  Codebook codebook;
  if (!codebook_path.empty()) {
    require_file(codebook_path, "codebook");
    codebook = load_codebook(codebook_path);
  } else {
    KMeansOptions o;
    o.k = static_cast<int>(cfg.get_int("clusters"));
    o.max_iters = static_cast<int>(cfg.get_int("kmeans_iters"));
    o.tol = cfg.get_double("kmeans_tol");
    o.seed = seed_for(cfg, SeedTag::kCodebook);
    codebook = fit_codebook(stack_frames(streams), o);
  }
  std::vector<AlignedFrames> aligned;
  std::map<int, long long> frames_per_unit;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    aligned.push_back({assign_nearest(streams[i].frames, codebook.centroids), labels[i]});
    for (int u : aligned.back().units) ++frames_per_unit[u];
  }
  const auto matrix =
      unit_phoneme_cooccurrence(aligned, static_cast<int>(cfg.get_int("top_n")), spec.concept_vocab_size());
  write_cooccurrence_csv(dir / "cooccurrence.csv", matrix, cfg.hash());
  auto out = io::open_text_output(dir / "unit_frequency.csv", cfg.hash());
  out << "unit,frames\n";
  for (const auto& [unit, count] : frames_per_unit) out << unit << ',' << count << '\n';
  std::printf("co-occurrence over %zu units x %d phonemes\n", matrix.unit_ids.size(), spec.concept_vocab_size());
  return 0;
}

int cmd_ablate_masking(const RunConfig& cfg) {
  const auto dir = prepare_out_dir(cfg, "ablate-masking");
  const auto spec = ToyLanguageSpec::generate(grammar_options(cfg));
  const auto corpus = build_training_corpus(spec, cfg);
  const auto rows = ablate_masking(spec, corpus, cfg, {0.0, 0.1, 0.3, 0.5});
  write_ablation_csv(dir / "masking_ablation.csv", rows, cfg.hash());
  for (const auto& r : rows) std::printf("p_m %.1f  bleu %.2f\n", r.p_m, r.grid.macro_average);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ututlab: unit-to-unit translation desk lab"};
  app.require_subcommand(1);
  std::map<std::string, std::unique_ptr<ConfigFlags>> flags;
  auto sub = [&](const std::string& name, const std::string& help) {
    auto* s = app.add_subcommand(name, help);
    flags[name] = std::make_unique<ConfigFlags>();
    add_config_flags(s, *flags[name]);
    return s;
  };

  std::string corpus, valid, resume, checkpoint, text_corpus, input, tgt_lang, test, codebook, languages;
  std::vector<std::string> features;
  bool from_scratch = false, greedy = false;

  sub("gen-corpus", "generate toy languages, a parallel corpus, test sets and text corpora");
  auto* fit = sub("fit-codebook", "fit a k-means codebook on feature files or synthetic corpus features");
  fit->add_option("--features", features, "feature files (UFEA)");
  fit->add_option("--corpus", corpus, "corpus manifest to synthesize features from");
  auto* quant = sub("quantize", "quantize features into deduplicated unit sequences");
  quant->add_option("--codebook", codebook, "codebook file");
  quant->add_option("--features", features, "feature files (UFEA)");
  quant->add_option("--corpus", corpus, "corpus manifest to synthesize features from");
  auto* tr = sub("train", "train a unit-to-unit model");
  tr->add_option("--corpus", corpus, "training corpus manifest");
  tr->add_option("--valid", valid, "validation corpus manifest (token accuracy per log interval)");
  tr->add_option("--resume", resume, "checkpoint to resume from");
  auto* ft = sub("finetune-text", "re-initialize the encoder embedding for phonemes and fine-tune");
  ft->add_option("--checkpoint", checkpoint, "unit model checkpoint");
  ft->add_option("--text-corpus", text_corpus, "text corpus manifest");
  ft->add_option("--valid", valid, "validation text manifest");
  ft->add_flag("--from-scratch", from_scratch, "start from a fresh model instead of a checkpoint");
  auto* trans = sub("translate", "decode a unit manifest into a target language");
  trans->add_option("--checkpoint", checkpoint, "model checkpoint");
  trans->add_option("--input", input, "unit manifest or parallel manifest (source side); phoneme ids for text models");
  trans->add_option("--tgt-lang", tgt_lang, "target language code");
  trans->add_flag("--greedy", greedy, "greedy decoding (beam 1, no length penalty)");
  auto* ev = sub("evaluate", "BLEU grid over every direction of a test manifest");
  ev->add_option("--checkpoint", checkpoint, "model checkpoint");
  ev->add_option("--test", test, "test manifest with oracle references");
  ev->add_option("--train", corpus, "training manifest (marks seen directions)");
  auto* insp = sub("inspect-units", "unit/phoneme co-occurrence and unit frequencies");
  insp->add_option("--spec", languages, "toy language spec file (default: generated from config)");
  insp->add_option("--codebook", codebook, "codebook (default: fitted on the rendered frames)");
  sub("ablate-masking", "train with p_m in {0, 0.1, 0.3, 0.5} and report BLEU");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", kExitUsage, e.what());
    return kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = flags.at(name)->resolve();
    if (name == "gen-corpus") return cmd_gen_corpus(cfg);
    if (name == "fit-codebook") return cmd_fit_codebook(cfg, features, corpus);
    if (name == "quantize") return cmd_quantize(cfg, codebook, features, corpus);
    if (name == "train") return cmd_train(cfg, corpus, valid, resume);
    if (name == "finetune-text") return cmd_finetune_text(cfg, checkpoint, text_corpus, valid, from_scratch);
    if (name == "translate") return cmd_translate(cfg, checkpoint, input, tgt_lang, greedy);
    if (name == "evaluate") return cmd_evaluate(cfg, checkpoint, test, corpus);
    if (name == "inspect-units") return cmd_inspect_units(cfg, languages, codebook);
    if (name == "ablate-masking") return cmd_ablate_masking(cfg);
  } catch (const Error& e) {
    report(std::string(to_string(e.kind())), exit_code(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    report("internal", 1, e.what());
    return 1;
  }
  return 1;
}
