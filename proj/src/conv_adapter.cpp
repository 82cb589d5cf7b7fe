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

#include "ututlab/conv_adapter.hpp"

#include <cmath>
#include <string>

#include "ututlab/error.hpp"
#include "ututlab/rng.hpp"

namespace ututlab {

ConvAdapterWeights init_conv_adapter(int in_dim, int out_dim, std::uint64_t seed, int kernel_size, int stride,
                                     int padding) {
  require(in_dim >= 1 && out_dim >= 1, ErrorKind::kConfig, "conv adapter dims must be positive");
  require(kernel_size >= 1 && stride >= 1 && padding >= 0, ErrorKind::kConfig,
          "conv adapter needs kernel >= 1, stride >= 1, padding >= 0");
  Rng rng(derive_seed(seed, 0xc0417));
  const double bound = std::sqrt(6.0 / static_cast<double>(kernel_size * in_dim + out_dim));
  ConvAdapterWeights w;
  w.stride = stride;
  w.padding = padding;
  for (int k = 0; k < kernel_size; ++k) {
    Mat tap(in_dim, out_dim);
    for (Eigen::Index i = 0; i < tap.size(); ++i) tap.data()[i] = (2.0 * rng.uniform() - 1.0) * bound;
    w.taps.push_back(std::move(tap));
  }
  w.bias = Mat::Zero(1, out_dim);
  return w;
}

int conv_output_length(int frames, int kernel_size, int stride, int padding) {
  return (frames + 2 * padding - kernel_size) / stride + 1;
}

Mat conv_adapter(const Mat& features, const ConvAdapterWeights& weights) {
  const int frames = static_cast<int>(features.rows());
  const int kernel = weights.kernel_size();
  require(kernel >= 1, ErrorKind::kInvalidArgument, "conv adapter has no taps");
  require(frames >= kernel, ErrorKind::kInvalidArgument,
          "conv adapter needs at least " + std::to_string(kernel) + " frames, got " + std::to_string(frames));
  require(features.cols() == weights.in_dim(), ErrorKind::kInvalidArgument,
          "feature dim " + std::to_string(features.cols()) + " does not match adapter input dim " +
              std::to_string(weights.in_dim()));
  const int out_len = conv_output_length(frames, kernel, weights.stride, weights.padding);
  Mat out(out_len, weights.out_dim());
  out.rowwise() = weights.bias.row(0);
  for (int i = 0; i < out_len; ++i) {
    const int start = i * weights.stride - weights.padding;
    for (int k = 0; k < kernel; ++k) {
      const int t = start + k;
      if (t < 0 || t >= frames) continue;
      out.row(i).noalias() += features.row(t) * weights.taps[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

EncoderOutput encode_features(const ModelState& model, const ConvAdapterWeights& weights, const Mat& features) {
  require(weights.out_dim() == model.config.dim, ErrorKind::kInvalidArgument,
          "adapter output dim " + std::to_string(weights.out_dim()) + " does not match model dim " +
              std::to_string(model.config.dim));
  return encode_embedded(model, {conv_adapter(features, weights)});
}

}  // namespace ututlab
