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

#include <cmath>
#include <cstdio>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "ututlab/error.hpp"
#include "ututlab/io.hpp"
#include "ututlab/training.hpp"

namespace ututlab {
namespace {

// Activation buffers are a few MB and are freed every step; with the default
// glibc thresholds each one is a fresh mmap, and the page faults cost about a
// fifth of the step time.
void keep_large_blocks_in_heap() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    return true;
  }();
  (void)done;
#endif
}

TrainResult run_loop(ModelState model, OptimizerState optimizer, long long step, Rng rng,
                     const std::vector<TrainingExample>& examples, const TrainOptions& options,
                     const EvalHook& eval_hook) {
  require(!examples.empty(), ErrorKind::kInvalidArgument, "training corpus is empty");
  keep_large_blocks_in_heap();
  options.schedule.validate();
  options.masking.validate();
  require(options.log_interval >= 1, ErrorKind::kConfig, "log_interval must be at least 1");
  const long long limit = options.max_steps > 0 ? std::min(options.max_steps, options.schedule.total_steps)
                                                : options.schedule.total_steps;
  const BatchingOptions batching{options.max_tokens, 0, options.sort_buckets};

  TrainResult result;
  double interval_loss = 0.0;
  long long interval_steps = 0;
  bool stop = false;
  const auto snapshot = [&] { return Checkpoint{model, optimizer, step, rng.state()}; };

  for (long long epoch = 0; step < limit && !stop; ++epoch) {
    BatchingOptions epoch_batching = batching;
    // Keyed on the step too so a resumed run does not replay the first epoch.
    epoch_batching.seed = derive_seed(options.seed, static_cast<std::uint64_t>(step) * 1000003ULL + epoch);
    auto batches = make_batches(examples, epoch_batching, model.src_vocab.pad(), model.vocab.pad());
    for (auto& batch : batches) {
      if (step >= limit || stop) break;
      mask_batch_sources(batch, options.masking, model.src_vocab.mask(), rng);
      LossResult loss;
      try {
        loss = loss_and_grads(model, batch, LossOptions{options.deterministic, &rng});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumeric) throw;
        throw DivergenceError("training diverged at step " + std::to_string(step + 1) + ": " + e.what(), snapshot());
      }
      const double lr = lr_at(step + 1, options.schedule);
      try {
        adam_step(model.params, loss.grads, optimizer, lr);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumeric) throw;
        throw DivergenceError("training diverged at step " + std::to_string(step + 1) + ": " + e.what(), snapshot());
      }
      ++step;
      result.step_losses.push_back(loss.loss);
      interval_loss += loss.loss;
      ++interval_steps;
      if (step % options.log_interval == 0 || step == limit) {
        MetricsRow row{step, interval_loss / static_cast<double>(interval_steps), lr, std::nullopt};
        if (eval_hook) row.val_token_acc = eval_hook(model, step);
        result.metrics.push_back(row);
        interval_loss = 0.0;
        interval_steps = 0;
        if (options.stop_at_accuracy > 0.0 && row.val_token_acc && *row.val_token_acc >= options.stop_at_accuracy) {
          stop = true;
        }
      }
    }
  }
  result.checkpoint = snapshot();
  return result;
}

}  // namespace

TrainResult train(ModelState model, const std::vector<TrainingExample>& examples, const TrainOptions& options,
                  const EvalHook& eval_hook) {
  OptimizerState optimizer = OptimizerState::zeros_for(model.params, options.adam);
  Rng rng(derive_seed(options.seed, 1));
  return run_loop(std::move(model), std::move(optimizer), 0, std::move(rng), examples, options, eval_hook);
}

TrainResult resume_training(const Checkpoint& from, const std::vector<TrainingExample>& examples,
                            const TrainOptions& options, const EvalHook& eval_hook) {
  Rng rng;
  rng.set_state(from.rng_state);
  return run_loop(from.model, from.optimizer, from.step, std::move(rng), examples, options, eval_hook);
}

double token_accuracy(const ModelState& model, const std::vector<TrainingExample>& validation, int max_tokens) {
  if (validation.empty()) return 0.0;
  const auto batches = make_batches(validation, BatchingOptions{max_tokens, 0, true}, model.src_vocab.pad(),
                                    model.vocab.pad());
  long long correct = 0, total = 0;
  for (const auto& b : batches) {
    const Mat logits = batch_logits(model, b);
    Eigen::Index row = 0;
    for (int r = 0; r < b.rows(); ++r) {
      for (int t : b.tgt_output_row(r)) {
        Eigen::Index arg;
        logits.row(row++).maxCoeff(&arg);
        correct += arg == t ? 1 : 0;
        ++total;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows,
                       const std::string& config_hash) {
  auto out = io::open_text_output(path, config_hash);
  out << "step,loss,lr,val_token_acc\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%lld,%.10g,%.10g,", r.step, r.loss, r.lr);
    out << buf;
    if (r.val_token_acc) {
      std::snprintf(buf, sizeof buf, "%.10g", *r.val_token_acc);
      out << buf;
    }
    out << '\n';
  }
  require(out.good(), ErrorKind::kIo, "write failed: " + path.string());
}

}  // namespace ututlab
