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

#include "ututlab/model.hpp"
#include "ututlab/tensor.hpp"

namespace ututlab {

// 1-D convolution over time that downsamples continuous features before the
// encoder. Output frame i reads input frames [i*stride - padding, i*stride -
// padding + kernel), zeros outside the input.
struct ConvAdapterWeights {
  std::vector<Mat> taps;  // kernel_size matrices, in_dim x out_dim
  Mat bias;               // 1 x out_dim
  int stride = 2;
  int padding = 2;

  int kernel_size() const { return static_cast<int>(taps.size()); }
  int in_dim() const { return taps.empty() ? 0 : static_cast<int>(taps.front().rows()); }
  int out_dim() const { return taps.empty() ? 0 : static_cast<int>(taps.front().cols()); }
};

// Xavier-uniform taps, zero bias.
ConvAdapterWeights init_conv_adapter(int in_dim, int out_dim, std::uint64_t seed, int kernel_size = 5,
                                     int stride = 2, int padding = 2);

// floor((frames + 2 * padding - kernel) / stride) + 1
int conv_output_length(int frames, int kernel_size, int stride, int padding);

// features: frames x in_dim. Throws when frames < kernel_size.
Mat conv_adapter(const Mat& features, const ConvAdapterWeights& weights);

// Runs the encoder on adapted features instead of unit embeddings.
EncoderOutput encode_features(const ModelState& model, const ConvAdapterWeights& weights, const Mat& features);

}  // namespace ututlab
