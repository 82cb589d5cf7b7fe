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

#include "ututlab/error.hpp"
#include "ututlab/training.hpp"

namespace ututlab {

void ScheduleConfig::validate() const {
  require(peak_lr > 0.0, ErrorKind::kConfig, "peak_lr must be positive");
  require(warmup_steps > 0 && warmup_steps < total_steps, ErrorKind::kConfig,
          "schedule needs 0 < warmup_steps < total_steps");
}

double lr_at(long long step, const ScheduleConfig& schedule) {
  schedule.validate();
  require(step >= 0 && step <= schedule.total_steps, ErrorKind::kInvalidArgument,
          "step " + std::to_string(step) + " outside [0, " + std::to_string(schedule.total_steps) + "]");
  if (step <= schedule.warmup_steps) {
    return schedule.peak_lr * (static_cast<double>(step) / static_cast<double>(schedule.warmup_steps));
  }
  const double remaining = static_cast<double>(schedule.total_steps - step) /
                           static_cast<double>(schedule.total_steps - schedule.warmup_steps);
  return schedule.peak_lr * remaining;
}

}  // namespace ututlab
