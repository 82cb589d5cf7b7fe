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

#include "ututlab/model.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "ututlab/error.hpp"

namespace ututlab {
namespace {

constexpr double kNormEps = 1e-5;

struct Layout {
  std::vector<int> offset;
  std::vector<int> length;
  int total = 0;

  static Layout of_lengths(const std::vector<int>& lengths) {
    Layout l;
    for (int n : lengths) {
      l.offset.push_back(l.total);
      l.length.push_back(n);
      l.total += n;
    }
    return l;
  }

  static Layout of_rows(const std::vector<std::vector<int>>& rows) {
    std::vector<int> lengths;
    for (const auto& r : rows) lengths.push_back(static_cast<int>(r.size()));
    return of_lengths(lengths);
  }

  int size() const { return static_cast<int>(length.size()); }
};

Mat affine(const Mat& x, const Mat& w, const Mat& b) {
  Mat y(x.rows(), w.cols());
  y.noalias() = x * w;
  y.rowwise() += b.row(0);
  return y;
}

// Accumulates x^T dy into gw and column sums of dy into gb.
void accumulate_affine(const Mat& x, const Mat& dy, Mat& gw, Mat& gb) {
  gw.noalias() += x.transpose() * dy;
  gb += dy.colwise().sum();
}

// ---------------------------------------------------------------- dropout

struct Dropout {
  Mat mask;  // empty when inactive; otherwise 0 or 1/(1-p)

  void forward(Mat& x, double p, Rng* rng) {
    if (rng == nullptr || p <= 0.0) {
      mask.resize(0, 0);
      return;
    }
    mask.resize(x.rows(), x.cols());
    const double keep = 1.0 / (1.0 - p);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng->uniform() < p ? 0.0 : keep;
    x.array() *= mask.array();
  }

  void backward(Mat& grad) const {
    if (mask.size() > 0) grad.array() *= mask.array();
  }
};

// ------------------------------------------------------------- layer norm

struct NormCache {
  Mat xhat;
  Eigen::VectorXd rstd;
};

Mat norm_forward(const Mat& x, const LayerNormWeights& w, NormCache& c) {
  const auto n = x.rows();
  const auto d = static_cast<double>(x.cols());
  c.xhat.resize(n, x.cols());
  c.rstd.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = x.row(r).sum() / d;
    const double var = (x.row(r).array() - mean).square().sum() / d;
    c.rstd(r) = 1.0 / std::sqrt(var + kNormEps);
    c.xhat.row(r) = (x.row(r).array() - mean) * c.rstd(r);
  }
  Mat y = c.xhat.array().rowwise() * w.gain.row(0).array();
  y.rowwise() += w.bias.row(0);
  return y;
}

Mat norm_backward(const Mat& dy, const LayerNormWeights& w, const NormCache& c, LayerNormWeights& g) {
  g.gain += dy.cwiseProduct(c.xhat).colwise().sum();
  g.bias += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * w.gain.row(0).array();
  const auto d = static_cast<double>(dy.cols());
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double sum = dxhat.row(r).sum();
    const double dot = dxhat.row(r).dot(c.xhat.row(r));
    dx.row(r) = (c.rstd(r) / d) * (d * dxhat.row(r).array() - sum - c.xhat.row(r).array() * dot);
  }
  return dx;
}

// -------------------------------------------------------------- attention

struct AttentionCache {
  Mat xq, xkv;
  Mat q, k, v, ctx;
  std::vector<Mat> probs;  // [seq * heads + head]
};

// Multi-head attention of query sequences (layout ql) over key/value
// sequences (layout kl); query sequence i reads key sequence kv_index[i].
Mat attention_forward(const AttentionWeights& w, const Mat& xq, const Mat& xkv, const Layout& ql, const Layout& kl,
                      const std::vector<int>& kv_index, bool causal, int heads, AttentionCache& c) {
  const auto dim = w.wq.cols();
  const auto dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c.xq = xq;
  c.xkv = xkv;
  c.q = affine(xq, w.wq, w.bq);
  c.k = affine(xkv, w.wk, w.bk);
  c.v = affine(xkv, w.wv, w.bv);
  c.ctx.setZero(xq.rows(), dim);
  c.probs.assign(static_cast<std::size_t>(ql.size() * heads), Mat());
  for (int s = 0; s < ql.size(); ++s) {
    const int j = kv_index[static_cast<std::size_t>(s)];
    const int lq = ql.length[s], lk = kl.length[j];
    for (int h = 0; h < heads; ++h) {
      auto qb = c.q.block(ql.offset[s], h * dh, lq, dh);
      auto kb = c.k.block(kl.offset[j], h * dh, lk, dh);
      auto vb = c.v.block(kl.offset[j], h * dh, lk, dh);
      Mat p(lq, lk);
      p.noalias() = qb * kb.transpose();
      p *= scale;
      for (int a = 0; a < lq; ++a) {
        const int visible = causal ? std::min(a + 1, lk) : lk;
        const double mx = p.row(a).head(visible).maxCoeff();
        double z = 0.0;
        for (int b = 0; b < visible; ++b) {
          p(a, b) = std::exp(p(a, b) - mx);
          z += p(a, b);
        }
        for (int b = 0; b < visible; ++b) p(a, b) /= z;
        for (int b = visible; b < lk; ++b) p(a, b) = 0.0;
      }
      c.ctx.block(ql.offset[s], h * dh, lq, dh).noalias() = p * vb;
      c.probs[static_cast<std::size_t>(s * heads + h)] = std::move(p);
    }
  }
  return affine(c.ctx, w.wo, w.bo);
}

// Returns the gradient w.r.t. the query input; adds the key/value input
// gradient into dxkv (which must be sized like xkv).
Mat attention_backward(const Mat& dout, const AttentionWeights& w, const AttentionCache& c, const Layout& ql,
                       const Layout& kl, const std::vector<int>& kv_index, int heads, AttentionWeights& g,
                       Mat& dxkv) {
  const auto dim = w.wq.cols();
  const auto dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  accumulate_affine(c.ctx, dout, g.wo, g.bo);
  Mat dctx(dout.rows(), dim);
  dctx.noalias() = dout * w.wo.transpose();

  Mat dq = Mat::Zero(c.q.rows(), dim);
  Mat dk = Mat::Zero(c.k.rows(), dim);
  Mat dv = Mat::Zero(c.v.rows(), dim);
  for (int s = 0; s < ql.size(); ++s) {
    const int j = kv_index[static_cast<std::size_t>(s)];
    const int lq = ql.length[s], lk = kl.length[j];
    for (int h = 0; h < heads; ++h) {
      const Mat& p = c.probs[static_cast<std::size_t>(s * heads + h)];
      auto dcb = dctx.block(ql.offset[s], h * dh, lq, dh);
      auto qb = c.q.block(ql.offset[s], h * dh, lq, dh);
      auto kb = c.k.block(kl.offset[j], h * dh, lk, dh);
      auto vb = c.v.block(kl.offset[j], h * dh, lk, dh);
      Mat dp(lq, lk);
      dp.noalias() = dcb * vb.transpose();
      dv.block(kl.offset[j], h * dh, lk, dh).noalias() += p.transpose() * dcb;
      // softmax backward: ds = p * (dp - rowsum(dp * p))
      const Eigen::VectorXd inner = dp.cwiseProduct(p).rowwise().sum();
      Mat ds = p.array() * (dp.array().colwise() - inner.array());
      ds *= scale;
      dq.block(ql.offset[s], h * dh, lq, dh).noalias() += ds * kb;
      dk.block(kl.offset[j], h * dh, lk, dh).noalias() += ds.transpose() * qb;
    }
  }
  accumulate_affine(c.xq, dq, g.wq, g.bq);
  accumulate_affine(c.xkv, dk, g.wk, g.bk);
  accumulate_affine(c.xkv, dv, g.wv, g.bv);
  dxkv.noalias() += dk * w.wk.transpose();
  dxkv.noalias() += dv * w.wv.transpose();
  Mat dxq(dq.rows(), c.xq.cols());
  dxq.noalias() = dq * w.wq.transpose();
  return dxq;
}

// ------------------------------------------------------------ feed-forward

struct FfnCache {
  Mat x, h;
};

Mat ffn_forward(const FeedForwardWeights& w, const Mat& x, FfnCache& c) {
  c.x = x;
  c.h = affine(x, w.w1, w.b1).cwiseMax(0.0);
  return affine(c.h, w.w2, w.b2);
}

Mat ffn_backward(const Mat& dy, const FeedForwardWeights& w, const FfnCache& c, FeedForwardWeights& g) {
  accumulate_affine(c.h, dy, g.w2, g.b2);
  Mat dh(dy.rows(), w.w2.rows());
  dh.noalias() = dy * w.w2.transpose();
  dh.array() *= (c.h.array() > 0.0).cast<double>();
  accumulate_affine(c.x, dh, g.w1, g.b1);
  Mat dx(dy.rows(), w.w1.rows());
  dx.noalias() = dh * w.w1.transpose();
  return dx;
}

std::vector<int> identity_index(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

void check_row(std::span<const int> row, int vocab_size, int max_positions, const char* side) {
  require(!row.empty(), ErrorKind::kInvalidArgument, std::string("empty ") + side + " row");
  require(static_cast<int>(row.size()) <= max_positions, ErrorKind::kInvalidArgument,
          std::string(side) + " sequence of length " + std::to_string(row.size()) + " exceeds max_positions " +
              std::to_string(max_positions));
  for (int t : row) {
    require(t >= 0 && t < vocab_size, ErrorKind::kInvalidArgument,
            std::string(side) + " token " + std::to_string(t) + " outside vocabulary of size " +
                std::to_string(vocab_size));
  }
}

// --------------------------------------------------------------- encoder

class EncoderPass {
 public:
  EncoderPass(const ModelState& model, Rng* rng) : model_(model), rng_(rng) {}

  const Mat& run_tokens(const std::vector<std::vector<int>>& rows) {
    layout_ = Layout::of_rows(rows);
    tokens_.clear();
    const auto& cfg = model_.config;
    const Mat& table = model_.encoder_table();
    for (const auto& r : rows) check_row(r, static_cast<int>(table.rows()), cfg.max_positions, "source");
    Mat x(layout_.total, cfg.dim);
    const double scale = embedding_scale(cfg);
    const Mat& pe = sinusoid_table(cfg.max_positions, cfg.dim);
    for (int s = 0; s < layout_.size(); ++s) {
      for (int p = 0; p < layout_.length[s]; ++p) {
        const int tok = rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(p)];
        x.row(layout_.offset[s] + p) = scale * table.row(tok) + pe.row(p);
        tokens_.push_back(tok);
      }
    }
    return run(std::move(x));
  }

  const Mat& run_embedded(const std::vector<Mat>& inputs) {
    std::vector<int> lengths;
    for (const auto& m : inputs) lengths.push_back(static_cast<int>(m.rows()));
    layout_ = Layout::of_lengths(lengths);
    const auto& cfg = model_.config;
    const Mat& pe = sinusoid_table(cfg.max_positions, cfg.dim);
    Mat x(layout_.total, cfg.dim);
    for (int s = 0; s < layout_.size(); ++s) {
      const auto& m = inputs[static_cast<std::size_t>(s)];
      require(m.cols() == cfg.dim, ErrorKind::kInvalidArgument, "embedded input width differs from model dim");
      require(m.rows() >= 1 && m.rows() <= cfg.max_positions, ErrorKind::kInvalidArgument,
              "embedded input length outside [1, max_positions]");
      x.middleRows(layout_.offset[s], m.rows()) = m + pe.topRows(m.rows());
    }
    return run(std::move(x));
  }

  const Layout& layout() const { return layout_; }
  const Mat& states() const { return out_; }

  void backward(const Mat& dstates, Parameters& g) {
    const auto& p = model_.params;
    const int heads = model_.config.heads;
    Mat dx = norm_backward(dstates, p.encoder_norm, final_norm_, g.encoder_norm);
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
      const auto& w = p.encoder[static_cast<std::size_t>(i)];
      auto& gw = g.encoder[static_cast<std::size_t>(i)];
      auto& c = layers_[static_cast<std::size_t>(i)];
      Mat df = dx;
      c.ffn_drop.backward(df);
      dx += norm_backward(ffn_backward(df, w.ffn, c.ffn, gw.ffn), w.ffn_norm, c.ffn_norm, gw.ffn_norm);
      Mat da = dx;
      c.attn_drop.backward(da);
      Mat dkv = Mat::Zero(dx.rows(), dx.cols());
      Mat dq = attention_backward(da, w.self_attn, c.attn, layout_, layout_, self_index_, heads, gw.self_attn, dkv);
      dq += dkv;
      dx += norm_backward(dq, w.self_norm, c.self_norm, gw.self_norm);
    }
    embed_drop_.backward(dx);
    if (tokens_.empty()) return;  // embedded inputs: no table gradient
    Mat& gtable = p.src_embedding.size() > 0 ? g.src_embedding : g.embedding;
    const double scale = embedding_scale(model_.config);
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      gtable.row(tokens_[i]) += scale * dx.row(static_cast<Eigen::Index>(i));
    }
  }

 private:
  struct LayerCache {
    NormCache self_norm;
    AttentionCache attn;
    Dropout attn_drop;
    NormCache ffn_norm;
    FfnCache ffn;
    Dropout ffn_drop;
  };

  const Mat& run(Mat x) {
    const auto& cfg = model_.config;
    const auto& p = model_.params;
    self_index_ = identity_index(layout_.size());
    embed_drop_.forward(x, cfg.dropout, rng_);
    layers_.assign(p.encoder.size(), LayerCache{});
    for (std::size_t i = 0; i < p.encoder.size(); ++i) {
      const auto& w = p.encoder[i];
      auto& c = layers_[i];
      const Mat n1 = norm_forward(x, w.self_norm, c.self_norm);
      Mat a = attention_forward(w.self_attn, n1, n1, layout_, layout_, self_index_, false, cfg.heads, c.attn);
      c.attn_drop.forward(a, cfg.dropout, rng_);
      x += a;
      const Mat n2 = norm_forward(x, w.ffn_norm, c.ffn_norm);
      Mat f = ffn_forward(w.ffn, n2, c.ffn);
      c.ffn_drop.forward(f, cfg.dropout, rng_);
      x += f;
    }
    out_ = norm_forward(x, p.encoder_norm, final_norm_);
    return out_;
  }

  const ModelState& model_;
  Rng* rng_;
  Layout layout_;
  std::vector<int> tokens_;
  std::vector<int> self_index_;
  Dropout embed_drop_;
  std::vector<LayerCache> layers_;
  NormCache final_norm_;
  Mat out_;
};

// --------------------------------------------------------------- decoder

class DecoderPass {
 public:
  DecoderPass(const ModelState& model, Rng* rng) : model_(model), rng_(rng) {}

  Mat run(const std::vector<std::vector<int>>& rows, const Mat& enc_states, const Layout& enc_layout,
          const std::vector<int>& cross_index) {
    const auto& cfg = model_.config;
    const auto& p = model_.params;
    require(rows.size() == cross_index.size(), ErrorKind::kInvalidArgument, "cross index size mismatch");
    for (int j : cross_index) {
      require(j >= 0 && j < enc_layout.size(), ErrorKind::kInvalidArgument, "cross index out of range");
    }
    for (const auto& r : rows) check_row(r, cfg.vocab_size, cfg.max_positions, "target");
    layout_ = Layout::of_rows(rows);
    enc_layout_ = &enc_layout;
    enc_states_ = &enc_states;
    cross_index_ = cross_index;
    self_index_ = identity_index(layout_.size());
    tokens_.clear();

    Mat x(layout_.total, cfg.dim);
    const double scale = embedding_scale(cfg);
    const Mat& pe = sinusoid_table(cfg.max_positions, cfg.dim);
    for (int s = 0; s < layout_.size(); ++s) {
      for (int q = 0; q < layout_.length[s]; ++q) {
        const int tok = rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(q)];
        x.row(layout_.offset[s] + q) = scale * p.embedding.row(tok) + pe.row(q);
        tokens_.push_back(tok);
      }
    }
    embed_drop_.forward(x, cfg.dropout, rng_);
    layers_.assign(p.decoder.size(), LayerCache{});
    for (std::size_t i = 0; i < p.decoder.size(); ++i) {
      const auto& w = p.decoder[i];
      auto& c = layers_[i];
      const Mat n1 = norm_forward(x, w.self_norm, c.self_norm);
      Mat a = attention_forward(w.self_attn, n1, n1, layout_, layout_, self_index_, true, cfg.heads, c.self_attn);
      c.self_drop.forward(a, cfg.dropout, rng_);
      x += a;
      const Mat n2 = norm_forward(x, w.cross_norm, c.cross_norm);
      Mat b = attention_forward(w.cross_attn, n2, enc_states, layout_, enc_layout, cross_index_, false, cfg.heads,
                                c.cross_attn);
      c.cross_drop.forward(b, cfg.dropout, rng_);
      x += b;
      const Mat n3 = norm_forward(x, w.ffn_norm, c.ffn_norm);
      Mat f = ffn_forward(w.ffn, n3, c.ffn);
      c.ffn_drop.forward(f, cfg.dropout, rng_);
      x += f;
    }
    final_out_ = norm_forward(x, p.decoder_norm, final_norm_);
    return affine(final_out_, p.output_weight, p.output_bias);
  }

  // Returns the gradient with respect to the encoder states.
  Mat backward(const Mat& dlogits, Parameters& g) {
    const auto& p = model_.params;
    const int heads = model_.config.heads;
    accumulate_affine(final_out_, dlogits, g.output_weight, g.output_bias);
    Mat dz(dlogits.rows(), p.output_weight.rows());
    dz.noalias() = dlogits * p.output_weight.transpose();
    Mat dx = norm_backward(dz, p.decoder_norm, final_norm_, g.decoder_norm);
    Mat denc = Mat::Zero(enc_states_->rows(), enc_states_->cols());
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
      const auto& w = p.decoder[static_cast<std::size_t>(i)];
      auto& gw = g.decoder[static_cast<std::size_t>(i)];
      auto& c = layers_[static_cast<std::size_t>(i)];
      Mat df = dx;
      c.ffn_drop.backward(df);
      dx += norm_backward(ffn_backward(df, w.ffn, c.ffn, gw.ffn), w.ffn_norm, c.ffn_norm, gw.ffn_norm);
      Mat db = dx;
      c.cross_drop.backward(db);
      Mat dq = attention_backward(db, w.cross_attn, c.cross_attn, layout_, *enc_layout_, cross_index_, heads,
                                  gw.cross_attn, denc);
      dx += norm_backward(dq, w.cross_norm, c.cross_norm, gw.cross_norm);
      Mat da = dx;
      c.self_drop.backward(da);
      Mat dkv = Mat::Zero(dx.rows(), dx.cols());
      Mat ds = attention_backward(da, w.self_attn, c.self_attn, layout_, layout_, self_index_, heads, gw.self_attn, dkv);
      ds += dkv;
      dx += norm_backward(ds, w.self_norm, c.self_norm, gw.self_norm);
    }
    embed_drop_.backward(dx);
    const double scale = embedding_scale(model_.config);
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      g.embedding.row(tokens_[i]) += scale * dx.row(static_cast<Eigen::Index>(i));
    }
    return denc;
  }

 private:
  struct LayerCache {
    NormCache self_norm;
    AttentionCache self_attn;
    Dropout self_drop;
    NormCache cross_norm;
    AttentionCache cross_attn;
    Dropout cross_drop;
    NormCache ffn_norm;
    FfnCache ffn;
    Dropout ffn_drop;
  };

  const ModelState& model_;
  Rng* rng_;
  Layout layout_;
  const Layout* enc_layout_ = nullptr;
  const Mat* enc_states_ = nullptr;
  std::vector<int> cross_index_;
  std::vector<int> self_index_;
  std::vector<int> tokens_;
  Dropout embed_drop_;
  std::vector<LayerCache> layers_;
  NormCache final_norm_;
  Mat final_out_;
};

struct BatchRows {
  std::vector<std::vector<int>> src, tgt_in;
  std::vector<int> targets;
};

BatchRows unpack(const Batch& batch) {
  BatchRows r;
  for (int i = 0; i < batch.rows(); ++i) {
    r.src.push_back(batch.src_row(i));
    auto in = batch.tgt_input_row(i);
    const auto out = batch.tgt_output_row(i);
    require(!out.empty(), ErrorKind::kInvalidArgument, "zero-length target in batch row " + batch.ids[static_cast<std::size_t>(i)]);
    require(in.size() == out.size(), ErrorKind::kInvalidArgument,
            "misaligned target rows for " + batch.ids[static_cast<std::size_t>(i)]);
    r.targets.insert(r.targets.end(), out.begin(), out.end());
    r.tgt_in.push_back(std::move(in));
  }
  require(!r.targets.empty(), ErrorKind::kInvalidArgument, "batch has no target tokens (all padding)");
  return r;
}

Mat init_normal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng.normal();
  return m;
}

LayerNormWeights make_norm(int dim) { return {Mat::Ones(1, dim), Mat::Zero(1, dim)}; }

AttentionWeights make_attention(int dim) {
  AttentionWeights a;
  for (Mat* m : {&a.wq, &a.wk, &a.wv, &a.wo}) m->resize(dim, dim);
  for (Mat* m : {&a.bq, &a.bk, &a.bv, &a.bo}) m->setZero(1, dim);
  return a;
}

FeedForwardWeights make_ffn(int dim, int ffn) {
  FeedForwardWeights f;
  f.w1.resize(dim, ffn);
  f.b1.setZero(1, ffn);
  f.w2.resize(ffn, dim);
  f.b2.setZero(1, dim);
  return f;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.enc_layers = 12;
  c.dec_layers = 12;
  c.dim = 1024;
  c.heads = 8;
  c.ffn_dim = 4096;
  c.vocab_size = 1000 + Vocabulary::kNumSpecials;
  return c;
}

void ModelConfig::validate() const {
  require(enc_layers >= 1 && dec_layers >= 1 && dim >= 1 && heads >= 1 && ffn_dim >= 1 && max_positions >= 1,
          ErrorKind::kConfig, "model sizes must all be at least 1");
  require(dim % heads == 0, ErrorKind::kConfig,
          "dim " + std::to_string(dim) + " is not divisible by heads " + std::to_string(heads));
  require(vocab_size >= 1, ErrorKind::kConfig, "vocab_size must be positive");
  require(src_vocab_size >= 0, ErrorKind::kConfig, "src_vocab_size must be non-negative");
  require(dropout >= 0.0 && dropout < 1.0, ErrorKind::kConfig, "dropout must be in [0, 1)");
  require(label_smoothing >= 0.0 && label_smoothing < 1.0, ErrorKind::kConfig, "label_smoothing must be in [0, 1)");
}

double embedding_scale(const ModelConfig& config) { return std::sqrt(static_cast<double>(config.dim)); }

const Mat& sinusoid_table(int positions, int dim) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, Mat> cache;
  std::lock_guard lock(mu);
  auto [it, inserted] = cache.try_emplace({positions, dim});
  if (inserted) {
    Mat& t = it->second;
    t.resize(positions, dim);
    for (int p = 0; p < positions; ++p) {
      for (int i = 0; i < dim; i += 2) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / dim);
        t(p, i) = std::sin(p * freq);
        if (i + 1 < dim) t(p, i + 1) = std::cos(p * freq);
      }
    }
  }
  return it->second;
}

Parameters zeros_like(const Parameters& params) {
  Parameters z = params;
  for_each_tensor(z, [](const std::string&, Mat& m) { m.setZero(); });
  return z;
}

std::size_t parameter_count(const Parameters& params) {
  std::size_t n = 0;
  for_each_tensor(params, [&](const std::string&, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

std::size_t expected_parameter_count(const ModelConfig& c) {
  const std::size_t d = static_cast<std::size_t>(c.dim), f = static_cast<std::size_t>(c.ffn_dim);
  const std::size_t v = static_cast<std::size_t>(c.vocab_size), vs = static_cast<std::size_t>(c.src_vocab_size);
  const std::size_t norm = 2 * d;
  const std::size_t attn = 4 * d * d + 4 * d;
  const std::size_t ffn = 2 * d * f + f + d;
  return v * d + vs * d + static_cast<std::size_t>(c.enc_layers) * (2 * norm + attn + ffn) + norm +
         static_cast<std::size_t>(c.dec_layers) * (3 * norm + 2 * attn + ffn) + norm + d * v + v;
}

ModelState init_model(ModelConfig config, const Vocabulary& vocab) {
  if (config.vocab_size == 0) config.vocab_size = vocab.size();
  config.validate();
  require(config.vocab_size == vocab.size(), ErrorKind::kConfig, "config vocab_size disagrees with vocabulary");
  require(config.src_vocab_size == 0, ErrorKind::kConfig, "a separate source table is installed by the text frontend");
  ModelState m;
  m.config = config;
  m.vocab = vocab;
  m.src_vocab = vocab;
  auto& p = m.params;
  const int d = config.dim;
  p.embedding.resize(config.vocab_size, d);
  for (int i = 0; i < config.enc_layers; ++i) {
    p.encoder.push_back({make_norm(d), make_attention(d), make_norm(d), make_ffn(d, config.ffn_dim)});
  }
  p.encoder_norm = make_norm(d);
  for (int i = 0; i < config.dec_layers; ++i) {
    p.decoder.push_back({make_norm(d), make_attention(d), make_norm(d), make_attention(d), make_norm(d),
                         make_ffn(d, config.ffn_dim)});
  }
  p.decoder_norm = make_norm(d);
  p.output_weight.resize(d, config.vocab_size);
  p.output_bias.setZero(1, config.vocab_size);

  Rng rng(config.seed);
  const double table_std = 1.0 / std::sqrt(static_cast<double>(d));
  for_each_tensor(p, [&](const std::string& name, Mat& t) {
    if (name == "embedding" || name == "output.weight") {
      t = init_normal(t.rows(), t.cols(), table_std, rng);
    } else if (ends_with(name, ".gain")) {
      t.setOnes();
    } else if (t.rows() == 1) {
      t.setZero();
    } else {
      const double a = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = a * (2.0 * rng.uniform() - 1.0);
    }
  });
  return m;
}

Mat encoder_input_embedding(const ModelState& model, std::span<const int> row) {
  const auto& cfg = model.config;
  const Mat& table = model.encoder_table();
  check_row(row, static_cast<int>(table.rows()), cfg.max_positions, "source");
  const Mat& pe = sinusoid_table(cfg.max_positions, cfg.dim);
  Mat x(static_cast<Eigen::Index>(row.size()), cfg.dim);
  for (std::size_t i = 0; i < row.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) =
        embedding_scale(cfg) * table.row(row[i]) + pe.row(static_cast<Eigen::Index>(i));
  }
  return x;
}

EncoderOutput encode(const ModelState& model, const std::vector<std::vector<int>>& rows) {
  EncoderPass pass(model, nullptr);
  pass.run_tokens(rows);
  return {pass.states(), pass.layout().offset, pass.layout().length};
}

EncoderOutput encode_embedded(const ModelState& model, const std::vector<Mat>& inputs) {
  EncoderPass pass(model, nullptr);
  pass.run_embedded(inputs);
  return {pass.states(), pass.layout().offset, pass.layout().length};
}

Mat decode_logits(const ModelState& model, const EncoderOutput& encoded,
                  const std::vector<std::vector<int>>& dec_rows, const std::vector<int>& cross_index) {
  const Layout enc_layout = Layout::of_lengths(encoded.lengths);
  DecoderPass pass(model, nullptr);
  return pass.run(dec_rows, encoded.states, enc_layout, cross_index);
}

Mat forward(const ModelState& model, const std::string& src_lang, std::span<const int> src_units,
            const std::string& tgt_lang, std::span<const int> tgt_prefix) {
  std::vector<int> enc{model.src_vocab.language_token(src_lang)};
  enc.insert(enc.end(), src_units.begin(), src_units.end());
  enc.push_back(model.src_vocab.eos());
  std::vector<int> dec{model.vocab.language_token(tgt_lang)};
  dec.insert(dec.end(), tgt_prefix.begin(), tgt_prefix.end());
  const auto encoded = encode(model, {enc});
  return decode_logits(model, encoded, {dec}, {0});
}

Mat log_softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

LossResult loss_and_grads(const ModelState& model, const Batch& batch, const LossOptions& options) {
  const BatchRows rows = unpack(batch);
  Rng* rng = options.deterministic ? nullptr : options.rng;
  require(options.deterministic || model.config.dropout <= 0.0 || rng != nullptr, ErrorKind::kInvalidArgument,
          "dropout requires an rng when not deterministic");

  EncoderPass enc(model, rng);
  enc.run_tokens(rows.src);
  DecoderPass dec(model, rng);
  const Mat logits = dec.run(rows.tgt_in, enc.states(), enc.layout(), identity_index(enc.layout().size()));

  const auto n = static_cast<double>(rows.targets.size());
  const auto vocab = static_cast<double>(logits.cols());
  const double eps = model.config.label_smoothing;
  const Mat logp = log_softmax_rows(logits);
  Mat dlogits = logp.array().exp();
  double loss = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int t = rows.targets[static_cast<std::size_t>(r)];
    loss -= (1.0 - eps) * logp(r, t);
    if (eps > 0.0) loss -= eps / vocab * logp.row(r).sum();
    dlogits(r, t) -= 1.0 - eps;
    if (eps > 0.0) dlogits.row(r).array() -= eps / vocab;
  }
  dlogits /= n;

  LossResult out;
  out.loss = loss / n;
  out.num_tokens = static_cast<long long>(rows.targets.size());
  require(std::isfinite(out.loss), ErrorKind::kNumeric, "non-finite loss");
  out.grads = zeros_like(model.params);
  const Mat denc = dec.backward(dlogits, out.grads);
  enc.backward(denc, out.grads);
  return out;
}

Mat batch_logits(const ModelState& model, const Batch& batch) {
  const BatchRows rows = unpack(batch);
  const auto encoded = encode(model, rows.src);
  return decode_logits(model, encoded, rows.tgt_in, identity_index(static_cast<int>(rows.src.size())));
}

double batch_loss(const ModelState& model, const Batch& batch) {
  const BatchRows rows = unpack(batch);
  const Mat logp = log_softmax_rows(batch_logits(model, batch));
  const double eps = model.config.label_smoothing;
  double loss = 0.0;
  for (Eigen::Index r = 0; r < logp.rows(); ++r) {
    loss -= (1.0 - eps) * logp(r, rows.targets[static_cast<std::size_t>(r)]);
    if (eps > 0.0) loss -= eps / static_cast<double>(logp.cols()) * logp.row(r).sum();
  }
  return loss / static_cast<double>(rows.targets.size());
}

}  // namespace ututlab
