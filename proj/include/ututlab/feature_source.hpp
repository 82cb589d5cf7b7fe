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
#include <vector>

#include "ututlab/codec.hpp"
#include "ututlab/rng.hpp"

namespace ututlab {

// A feature stream plus, for each frame, the index of the unit position
// that produced it.
struct RenderedFeatures {
  FeatureStream stream;
  std::vector<int> frame_position;
};

// Pluggable producer of continuous features for a unit sequence. Stands in
// for a self-supervised speech encoder.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual int dim() const = 0;
  virtual RenderedFeatures render(const UnitSequence& units, Rng& rng) const = 0;
};

struct SyntheticFeatureOptions {
  int num_units = 64;
  int dim = 16;
  double prototype_scale = 4.0;
  double noise = 0.3;
  int min_dwell = 1;
  int max_dwell = 3;
  std::uint64_t seed = 0;
};

// Each unit id owns a Gaussian prototype vector; frames are the prototype
// plus isotropic noise, held for a random dwell.
class SyntheticFeatureSource final : public FeatureSource {
 public:
  explicit SyntheticFeatureSource(const SyntheticFeatureOptions& options);

  int dim() const override { return options_.dim; }
  RenderedFeatures render(const UnitSequence& units, Rng& rng) const override;
  const Mat& prototypes() const { return prototypes_; }

 private:
  SyntheticFeatureOptions options_;
  Mat prototypes_;
};

}  // namespace ututlab
