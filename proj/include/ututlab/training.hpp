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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ututlab/batching.hpp"
#include "ututlab/error.hpp"
#include "ututlab/model.hpp"
#include "ututlab/rng.hpp"

namespace ututlab {

// ---------------------------------------------------------------- schedule

struct ScheduleConfig {
  double peak_lr = 1.5e-3;
  long long warmup_steps = 500;
  long long total_steps = 8000;

  void validate() const;
};

// Linear warmup 0 -> peak over [0, warmup], linear decay peak -> 0 over
// [warmup, total]. Throws for step outside [0, total].
double lr_at(long long step, const ScheduleConfig& schedule);

// ----------------------------------------------------------------- masking

struct MaskingConfig {
  double p_m = 0.0;      // fraction of tokens to cover
  double lambda = 10.0;  // Poisson mean span length

  void validate() const;
};

// Covers ceil(p_m * n) positions with spans (uniform start, Poisson length,
// zero lengths redrawn, overlap allowed, clipped at the end). The final span
// is trimmed so exactly ceil(p_m * n) positions end up masked.
std::vector<int> span_mask(std::span<const int> tokens, const MaskingConfig& config, int mask_id, Rng& rng);

// Masks only the unit positions of every encoder row (not <L_s>, not EOS).
void mask_batch_sources(Batch& batch, const MaskingConfig& config, int mask_id, Rng& rng);

// -------------------------------------------------------------------- Adam

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // 0 disables global-norm clipping
};

struct OptimizerState {
  AdamConfig config;
  long long step = 0;
  Parameters first_moment;
  Parameters second_moment;

  static OptimizerState zeros_for(const Parameters& params, const AdamConfig& config);
};

// Bias-corrected Adam. Throws kNumeric naming the first tensor with a
// non-finite gradient; parameters are left untouched in that case.
void adam_step(Parameters& params, const Parameters& grads, OptimizerState& state, double lr);

double global_grad_norm(const Parameters& grads);

// -------------------------------------------------------------- checkpoint

struct Checkpoint {
  ModelState model;
  OptimizerState optimizer;
  long long step = 0;
  std::string rng_state;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies checkpoint parameters into `target`, which must have identical
// tensor names and shapes; the error names the first mismatch.
void restore_parameters(ModelState& target, const ModelState& source);

// ------------------------------------------------------------------- train

struct MetricsRow {
  long long step = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> val_token_acc;
};

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows,
                       const std::string& config_hash = {});

struct TrainOptions {
  ScheduleConfig schedule;
  MaskingConfig masking;
  AdamConfig adam;
  int max_tokens = 512;
  bool sort_buckets = true;
  std::uint64_t seed = 0;
  bool deterministic = false;  // disables dropout
  long long log_interval = 100;
  long long max_steps = 0;     // stop early; 0 means schedule.total_steps
  // Stop once validation token accuracy reaches this value (checked at log
  // intervals); 0 disables.
  double stop_at_accuracy = 0.0;
};

// Called at each log interval with a read-only model; returns validation
// token accuracy if it computes one.
using EvalHook = std::function<std::optional<double>(const ModelState&, long long step)>;

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricsRow> metrics;
  std::vector<double> step_losses;  // one per optimizer step
};

// Thrown when the loss turns non-finite; carries the last good state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, Checkpoint last_good)
      : Error(ErrorKind::kNumeric, message), last_good_(std::move(last_good)) {}
  const Checkpoint& last_good() const { return last_good_; }

 private:
  Checkpoint last_good_;
};

// UTUT training: token-budget batches (reshuffled per epoch), span masking on
// encoder units, cross-entropy, Adam on the warmup/decay schedule.
TrainResult train(ModelState model, const std::vector<TrainingExample>& examples, const TrainOptions& options,
                  const EvalHook& eval_hook = {});

// Continues from a checkpoint (optimizer state, step counter and RNG state).
TrainResult resume_training(const Checkpoint& from, const std::vector<TrainingExample>& examples,
                            const TrainOptions& options, const EvalHook& eval_hook = {});

// Teacher-forced argmax accuracy over every target position (units and EOS).
double token_accuracy(const ModelState& model, const std::vector<TrainingExample>& validation,
                      int max_tokens = 4096);

}  // namespace ututlab
