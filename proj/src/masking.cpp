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

#include "ututlab/error.hpp"
#include "ututlab/training.hpp"

namespace ututlab {

void MaskingConfig::validate() const {
  require(p_m >= 0.0 && p_m <= 1.0, ErrorKind::kConfig, "p_m must lie in [0, 1]");
  require(lambda > 0.0, ErrorKind::kConfig, "span length mean must be positive");
}

std::vector<int> span_mask(std::span<const int> tokens, const MaskingConfig& config, int mask_id, Rng& rng) {
  config.validate();
  std::vector<int> out(tokens.begin(), tokens.end());
  const auto n = static_cast<long long>(out.size());
  // The small slack keeps e.g. 0.3 * 100 from rounding up to 31.
  const auto target = static_cast<long long>(std::ceil(config.p_m * static_cast<double>(n) - 1e-9));
  std::vector<bool> covered(out.size(), false);
  long long count = 0;
  while (count < target) {
    int length = 0;
    while (length == 0) length = rng.poisson(config.lambda);
    const auto start = static_cast<long long>(rng.below(static_cast<std::uint64_t>(n)));
    for (long long i = start; i < std::min(n, start + length) && count < target; ++i) {
      if (covered[static_cast<std::size_t>(i)]) continue;
      covered[static_cast<std::size_t>(i)] = true;
      out[static_cast<std::size_t>(i)] = mask_id;
      ++count;
    }
  }
  return out;
}

void mask_batch_sources(Batch& batch, const MaskingConfig& config, int mask_id, Rng& rng) {
  if (config.p_m <= 0.0) return;
  for (int r = 0; r < batch.rows(); ++r) {
    const auto row = batch.src_row(r);
    if (row.size() <= 2) continue;
    const std::span<const int> units(row.data() + 1, row.size() - 2);
    const auto masked = span_mask(units, config, mask_id, rng);
    for (std::size_t i = 0; i < masked.size(); ++i) {
      batch.src_tokens(r, static_cast<Eigen::Index>(i + 1)) = masked[i];
    }
  }
}

}  // namespace ututlab
