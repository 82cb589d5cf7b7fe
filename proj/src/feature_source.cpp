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

#include "ututlab/feature_source.hpp"

#include "ututlab/error.hpp"

namespace ututlab {

SyntheticFeatureSource::SyntheticFeatureSource(const SyntheticFeatureOptions& options)
    : options_(options) {
  require(options.num_units >= 1 && options.dim >= 1, ErrorKind::kInvalidArgument,
          "synthetic features need at least one unit and one dimension");
  require(options.min_dwell >= 1 && options.max_dwell >= options.min_dwell, ErrorKind::kInvalidArgument,
          "invalid dwell range");
  Rng rng(options.seed);
  prototypes_.resize(options.num_units, options.dim);
  for (Eigen::Index i = 0; i < prototypes_.size(); ++i) {
    prototypes_.data()[i] = options.prototype_scale * rng.normal();
  }
}

RenderedFeatures SyntheticFeatureSource::render(const UnitSequence& units, Rng& rng) const {
  require(!units.units.empty(), ErrorKind::kInvalidArgument, "cannot render an empty sequence");
  std::vector<int> dwell(units.units.size());
  Eigen::Index total = 0;
  for (auto& d : dwell) {
    d = options_.min_dwell + rng.below(options_.max_dwell - options_.min_dwell + 1);
    total += d;
  }
  RenderedFeatures out;
  out.stream.utt_id = units.utt_id;
  out.stream.lang = units.lang;
  out.stream.frames.resize(total, options_.dim);
  out.frame_position.reserve(static_cast<std::size_t>(total));
  Eigen::Index row = 0;
  for (std::size_t p = 0; p < units.units.size(); ++p) {
    const int u = units.units[p];
    require(u >= 0 && u < options_.num_units, ErrorKind::kInvalidArgument,
            "unit id " + std::to_string(u) + " has no prototype");
    for (int r = 0; r < dwell[p]; ++r, ++row) {
      for (int c = 0; c < options_.dim; ++c) {
        out.stream.frames(row, c) = prototypes_(u, c) + options_.noise * rng.normal();
      }
      out.frame_position.push_back(static_cast<int>(p));
    }
  }
  return out;
}

}  // namespace ututlab
