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

// Transformer encoder-decoder conditioned on language tokens. The encoder
// reads [<L_s>, units..., EOS]; the decoder reads [<L_t>, prefix...] and
// predicts the next unit at every position. Pre-norm residual blocks,
// sinusoidal positions, one token table shared by encoder and decoder
// (unless a separate source table is installed), untied output projection.
// Gradients are computed by hand-written backpropagation.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ututlab/batching.hpp"
#include "ututlab/rng.hpp"
#include "ututlab/tensor.hpp"
#include "ututlab/vocabulary.hpp"

namespace ututlab {

struct ModelConfig {
  int enc_layers = 2;
  int dec_layers = 2;
  int dim = 128;
  int heads = 4;
  int ffn_dim = 512;
  double dropout = 0.1;
  int max_positions = 256;
  int vocab_size = 0;      // decoder (and shared) table rows
  int src_vocab_size = 0;  // 0 when the encoder uses the shared table
  double label_smoothing = 0.0;
  std::uint64_t seed = 0;

  // 12+12 layers, width 1024, 8 heads, FFN 4096.
  static ModelConfig full_scale();

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LayerNormWeights {
  Mat gain;  // 1 x dim
  Mat bias;
};

struct AttentionWeights {
  Mat wq, bq, wk, bk, wv, bv, wo, bo;  // weights dim x dim, biases 1 x dim
};

struct FeedForwardWeights {
  Mat w1, b1, w2, b2;
};

struct EncoderLayerWeights {
  LayerNormWeights self_norm;
  AttentionWeights self_attn;
  LayerNormWeights ffn_norm;
  FeedForwardWeights ffn;
};

struct DecoderLayerWeights {
  LayerNormWeights self_norm;
  AttentionWeights self_attn;
  LayerNormWeights cross_norm;
  AttentionWeights cross_attn;
  LayerNormWeights ffn_norm;
  FeedForwardWeights ffn;
};

struct Parameters {
  Mat embedding;      // vocab_size x dim, used by the decoder (and encoder when shared)
  Mat src_embedding;  // src_vocab_size x dim, empty when shared
  std::vector<EncoderLayerWeights> encoder;
  LayerNormWeights encoder_norm;
  std::vector<DecoderLayerWeights> decoder;
  LayerNormWeights decoder_norm;
  Mat output_weight;  // dim x vocab_size
  Mat output_bias;    // 1 x vocab_size
};

namespace detail {

template <class LN, class Fn>
void visit_norm(const std::string& p, LN& n, Fn& fn) {
  fn(p + ".gain", n.gain);
  fn(p + ".bias", n.bias);
}

template <class A, class Fn>
void visit_attention(const std::string& p, A& a, Fn& fn) {
  fn(p + ".wq", a.wq);
  fn(p + ".bq", a.bq);
  fn(p + ".wk", a.wk);
  fn(p + ".bk", a.bk);
  fn(p + ".wv", a.wv);
  fn(p + ".bv", a.bv);
  fn(p + ".wo", a.wo);
  fn(p + ".bo", a.bo);
}

template <class F, class Fn>
void visit_ffn(const std::string& p, F& f, Fn& fn) {
  fn(p + ".w1", f.w1);
  fn(p + ".b1", f.b1);
  fn(p + ".w2", f.w2);
  fn(p + ".b2", f.b2);
}

}  // namespace detail

// Calls fn(name, tensor) for every parameter tensor in a fixed order. The
// source table is visited only when present.
template <class P, class Fn>
void for_each_tensor(P& params, Fn&& fn) {
  fn(std::string("embedding"), params.embedding);
  if (params.src_embedding.size() > 0) fn(std::string("src_embedding"), params.src_embedding);
  for (std::size_t i = 0; i < params.encoder.size(); ++i) {
    auto& l = params.encoder[i];
    const std::string p = "encoder." + std::to_string(i);
    detail::visit_norm(p + ".self_norm", l.self_norm, fn);
    detail::visit_attention(p + ".self_attn", l.self_attn, fn);
    detail::visit_norm(p + ".ffn_norm", l.ffn_norm, fn);
    detail::visit_ffn(p + ".ffn", l.ffn, fn);
  }
  detail::visit_norm("encoder.norm", params.encoder_norm, fn);
  for (std::size_t i = 0; i < params.decoder.size(); ++i) {
    auto& l = params.decoder[i];
    const std::string p = "decoder." + std::to_string(i);
    detail::visit_norm(p + ".self_norm", l.self_norm, fn);
    detail::visit_attention(p + ".self_attn", l.self_attn, fn);
    detail::visit_norm(p + ".cross_norm", l.cross_norm, fn);
    detail::visit_attention(p + ".cross_attn", l.cross_attn, fn);
    detail::visit_norm(p + ".ffn_norm", l.ffn_norm, fn);
    detail::visit_ffn(p + ".ffn", l.ffn, fn);
  }
  detail::visit_norm("decoder.norm", params.decoder_norm, fn);
  fn(std::string("output.weight"), params.output_weight);
  fn(std::string("output.bias"), params.output_bias);
}

Parameters zeros_like(const Parameters& params);
std::size_t parameter_count(const Parameters& params);

// Closed-form parameter count for a configuration.
std::size_t expected_parameter_count(const ModelConfig& config);

struct ModelState {
  ModelConfig config;
  Vocabulary vocab;      // decoder / shared token space
  Vocabulary src_vocab;  // encoder token space (== vocab unless a text frontend is installed)
  Parameters params;

  std::size_t parameter_count() const { return ututlab::parameter_count(params); }
  const Mat& encoder_table() const {
    return params.src_embedding.size() > 0 ? params.src_embedding : params.embedding;
  }
};

// Deterministic initialisation from config.seed. Token tables and the output
// projection are N(0, 1/dim); other matrices Xavier-uniform; norms identity.
// config.vocab_size is taken from `vocab` when zero.
ModelState init_model(ModelConfig config, const Vocabulary& vocab);

// Token embedding scale (sqrt(dim)) applied on lookup.
double embedding_scale(const ModelConfig& config);
const Mat& sinusoid_table(int positions, int dim);

struct EncoderOutput {
  Mat states;                // total tokens x dim (after the final norm)
  std::vector<int> offsets;  // per sequence
  std::vector<int> lengths;
};

// Embedded encoder input (token lookup * scale + position) for one row.
Mat encoder_input_embedding(const ModelState& model, std::span<const int> row);

EncoderOutput encode(const ModelState& model, const std::vector<std::vector<int>>& rows);

// Encoder over pre-embedded inputs (the continuous-feature pathway). Each
// entry is a len x dim matrix to which positions are added.
EncoderOutput encode_embedded(const ModelState& model, const std::vector<Mat>& inputs);

// Decoder logits for each row (rows concatenated), row i attending to
// encoder sequence cross_index[i].
Mat decode_logits(const ModelState& model, const EncoderOutput& encoded,
                  const std::vector<std::vector<int>>& dec_rows, const std::vector<int>& cross_index);

// Logits for every decoder position: (|tgt_prefix| + 1) x vocab.
Mat forward(const ModelState& model, const std::string& src_lang, std::span<const int> src_units,
            const std::string& tgt_lang, std::span<const int> tgt_prefix);

struct LossOptions {
  bool deterministic = true;  // disables dropout
  Rng* rng = nullptr;         // dropout masks; required when !deterministic and dropout > 0
};

struct LossResult {
  double loss = 0.0;          // mean over counted target positions
  long long num_tokens = 0;
  Parameters grads;
};

LossResult loss_and_grads(const ModelState& model, const Batch& batch, const LossOptions& options = {});

// Loss only (no gradient buffers); dropout disabled.
double batch_loss(const ModelState& model, const Batch& batch);

// Teacher-forced logits for every non-pad target position, rows in batch order.
Mat batch_logits(const ModelState& model, const Batch& batch);

Mat log_softmax_rows(const Mat& logits);

}  // namespace ututlab
