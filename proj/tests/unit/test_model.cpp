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

#include "doctest.h"
#include "support/oracles.hpp"
#include "ututlab/conv_adapter.hpp"
#include "ututlab/error.hpp"
#include "ututlab/model.hpp"

using namespace ututlab;

TEST_CASE("initialisation is deterministic and shape-consistent") {
  const auto v = oracle::micro_vocab();
  const auto a = init_model(oracle::micro_config(7), v);
  const auto b = init_model(oracle::micro_config(7), v);
  const auto c = init_model(oracle::micro_config(8), v);
  bool all_equal = true, any_diff = false;
  for_each_tensor(a.params, [&](const std::string& name, const Mat& t) {
    for_each_tensor(b.params, [&](const std::string& n2, const Mat& t2) {
      if (n2 == name) all_equal &= t == t2;
    });
  });
  for_each_tensor(a.params, [&](const std::string& name, const Mat& t) {
    for_each_tensor(c.params, [&](const std::string& n2, const Mat& t2) {
      if (n2 == name && t.rows() > 1) any_diff |= t != t2;
    });
  });
  CHECK(all_equal);
  CHECK(any_diff);
  CHECK(a.params.decoder[0].self_norm.gain.isOnes());
  CHECK(a.params.decoder[0].self_norm.bias.isZero());
}

TEST_CASE("dim must divide into heads") {
  ModelConfig c = oracle::micro_config();
  c.dim = 6;
  c.heads = 4;
  CHECK_THROWS_AS(init_model(c, oracle::micro_vocab()), Error);
}

TEST_CASE("parameter count matches the tensor shapes") {
  const Vocabulary v(64, {"A", "B", "C", "D"});
  ModelConfig c;
  c.seed = 1;
  const auto m = init_model(c, v);
  CHECK(m.parameter_count() == oracle::hand_parameter_count(m.config));
  CHECK(expected_parameter_count(m.config) == oracle::hand_parameter_count(m.config));
  const auto micro = init_model(oracle::micro_config(), oracle::micro_vocab());
  CHECK(micro.parameter_count() == 12520);
}

TEST_CASE("encoder input layout") {
  const auto v = oracle::micro_vocab();
  const auto m = init_model(oracle::micro_config(), v);
  const std::vector<int> row_a{v.language_token("A"), 3, 4, 5, v.eos()};
  std::vector<int> row_b = row_a;
  row_b[0] = v.language_token("B");
  const Mat ea = encoder_input_embedding(m, row_a);
  const Mat eb = encoder_input_embedding(m, row_b);
  const Mat& pe = sinusoid_table(m.config.max_positions, m.config.dim);
  CHECK((ea.row(0) - (std::sqrt(16.0) * m.params.embedding.row(v.language_token("A")) + pe.row(0))).cwiseAbs().maxCoeff() <
        1e-15);
  CHECK(ea.row(0) != eb.row(0));
  CHECK(ea.bottomRows(4) == eb.bottomRows(4));
}

TEST_CASE("decoder is causal") {
  const auto v = oracle::micro_vocab();
  const auto m = init_model(oracle::micro_config(), v);
  const std::vector<int> src{1, 2, 3, 4};
  std::vector<int> prefix{5, 6, 7, 8, 9};
  const Mat base = forward(m, "A", src, "B", prefix);
  CHECK(base.rows() == 6);
  CHECK(base.cols() == v.size());
  for (std::size_t j = 0; j < prefix.size(); ++j) {
    auto changed = prefix;
    changed[j] = 20;
    const Mat out = forward(m, "A", src, "B", changed);
    // decoder position j + 1 reads prefix[j]; everything before is untouched
    CHECK(out.topRows(static_cast<Eigen::Index>(j) + 1) == base.topRows(static_cast<Eigen::Index>(j) + 1));
    CHECK(out.row(static_cast<Eigen::Index>(j) + 1) != base.row(static_cast<Eigen::Index>(j) + 1));
  }
}

TEST_CASE("forward rejects bad tokens and lengths") {
  const auto v = oracle::micro_vocab();
  const auto m = init_model(oracle::micro_config(), v);
  CHECK_THROWS_AS(forward(m, "A", std::vector<int>{1, 99}, "B", std::vector<int>{}), Error);
  CHECK_THROWS_AS(forward(m, "A", std::vector<int>{1}, "B", std::vector<int>{-1}), Error);
  CHECK_THROWS_AS(forward(m, "A", std::vector<int>(80, 1), "B", std::vector<int>{}), Error);
  CHECK_THROWS_AS(forward(m, "Q", std::vector<int>{1}, "B", std::vector<int>{}), Error);
}

TEST_CASE("softmax rows are normalised") {
  const auto v = oracle::micro_vocab();
  const auto m = init_model(oracle::micro_config(), v);
  const Mat lp = log_softmax_rows(forward(m, "A", std::vector<int>{1, 2, 3}, "B", std::vector<int>{4, 5}));
  for (Eigen::Index r = 0; r < lp.rows(); ++r) CHECK(std::abs(lp.row(r).array().exp().sum() - 1.0) < 1e-6);
}

TEST_CASE("uniform logits give loss ln V") {
  const auto v = oracle::micro_vocab();
  auto m = init_model(oracle::micro_config(), v);
  m.params.output_weight.setZero();
  m.params.output_bias.setZero();
  const auto batch = oracle::batch_of({make_example("x", "A", {1, 2, 3}, v, "B", {4, 5}, v)}, v);
  const auto r = loss_and_grads(m, batch);
  CHECK(r.loss == doctest::Approx(std::log(static_cast<double>(v.size()))).epsilon(1e-14));
  CHECK(r.num_tokens == 3);
}

TEST_CASE("analytic gradients match finite differences") {
  const auto v = oracle::micro_vocab();
  const auto m = init_model(oracle::micro_config(), v);
  const auto batch = oracle::batch_of({make_example("x", "A", {1, 2, 3}, v, "B", {4, 5, 6}, v),
                                       make_example("y", "B", {7, 8}, v, "A", {9, 10, 11, 12}, v)},
                                      v);
  const auto r = oracle::finite_difference_check(m, batch);
  CHECK(r.checked == m.parameter_count());
  INFO("worst entry: " << r.worst_entry);
  CHECK(r.worst_relative_error < 1e-4);
}

TEST_CASE("loss is the token-weighted mean of row losses") {
  const auto v = oracle::micro_vocab();
  const auto m = init_model(oracle::micro_config(), v);
  Rng rng(12);
  std::vector<TrainingExample> ex;
  for (int i = 0; i < 5; ++i) {
    ex.push_back(make_example("r" + std::to_string(i), "A", oracle::random_units(rng, 35, 1, 9), v, "B",
                              oracle::random_units(rng, 35, 1, 9), v));
  }
  double weighted = 0.0;
  long long tokens = 0;
  for (const auto& e : ex) {
    const auto r = loss_and_grads(m, oracle::batch_of({e}, v));
    weighted += r.loss * static_cast<double>(r.num_tokens);
    tokens += r.num_tokens;
  }
  const auto all = loss_and_grads(m, oracle::batch_of(ex, v));
  CHECK(all.num_tokens == tokens);
  CHECK(all.loss == doctest::Approx(weighted / static_cast<double>(tokens)).epsilon(1e-12));
  CHECK(batch_loss(m, oracle::batch_of(ex, v)) == all.loss);
}

TEST_CASE("degenerate batches are rejected") {
  const auto v = oracle::micro_vocab();
  const auto m = init_model(oracle::micro_config(), v);
  TrainingExample empty_target{"e", {v.language_token("A"), 1, v.eos()}, {v.language_token("B")}};
  CHECK_THROWS_AS(loss_and_grads(m, oracle::batch_of({empty_target}, v)), Error);
  CHECK_THROWS_AS(loss_and_grads(m, oracle::batch_of({}, v)), Error);
}

TEST_CASE("dropout is active only without the deterministic flag") {
  auto cfg = oracle::micro_config();
  cfg.dropout = 0.3;
  const auto v = oracle::micro_vocab();
  const auto m = init_model(cfg, v);
  const auto batch = oracle::batch_of({make_example("x", "A", {1, 2, 3}, v, "B", {4, 5}, v)}, v);
  Rng r1(1), r2(1), r3(2);
  const double det = loss_and_grads(m, batch, {true, &r1}).loss;
  CHECK(det == batch_loss(m, batch));
  const double a = loss_and_grads(m, batch, {false, &r2}).loss;
  const double b = loss_and_grads(m, batch, {false, &r3}).loss;
  CHECK(a != det);
  CHECK(a != b);
}

TEST_CASE("convolutional adapter") {
  Rng rng(21);
  const auto w = init_conv_adapter(3, 4, 5);
  SUBCASE("stride arithmetic") {
    CHECK(conv_adapter(Mat::Zero(10, 3), w).rows() == 5);
    CHECK(conv_adapter(Mat::Zero(5, 3), w).rows() == 3);
    CHECK(conv_output_length(11, 5, 2, 2) == 6);
    CHECK_THROWS_AS(conv_adapter(Mat::Zero(4, 3), w), Error);
    CHECK_THROWS_AS(conv_adapter(Mat::Zero(8, 2), w), Error);
  }
  SUBCASE("identity kernel samples even frames") {
    ConvAdapterWeights id;
    for (int k = 0; k < 5; ++k) id.taps.push_back(k == 2 ? Mat(Mat::Identity(3, 3)) : Mat(Mat::Zero(3, 3)));
    id.bias = Mat::Zero(1, 3);
    Mat x(10, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const Mat y = conv_adapter(x, id);
    for (int i = 0; i < 5; ++i) CHECK(y.row(i) == x.row(2 * i));
  }
  SUBCASE("random input matches the direct sum") {
    auto wb = w;
    for (Eigen::Index i = 0; i < wb.bias.size(); ++i) wb.bias.data()[i] = rng.normal();
    for (int T : {5, 6, 9, 17}) {
      Mat x(T, 3);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
      CHECK((conv_adapter(x, wb) - oracle::naive_conv(x, wb)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("features feed the encoder") {
    const auto m = init_model(oracle::micro_config(), oracle::micro_vocab());
    const auto a = init_conv_adapter(3, 16, 9);
    Mat x(12, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const auto enc = encode_features(m, a, x);
    CHECK(enc.states.rows() == 6);
    CHECK(enc.states.allFinite());
    CHECK_THROWS_AS(encode_features(m, w, x), Error);
  }
}
