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
#include <set>

#include "doctest.h"
#include "support/oracles.hpp"
#include "ututlab/error.hpp"
#include "ututlab/generation.hpp"

using namespace ututlab;

namespace {

void check_clean(const std::vector<int>& units, int base) {
  for (std::size_t i = 0; i < units.size(); ++i) {
    CHECK(units[i] >= 0);
    CHECK(units[i] < base);
    if (i > 0) CHECK(units[i] != units[i - 1]);
  }
}

}  // namespace

TEST_CASE("beam width 1 reproduces greedy decoding") {
  const auto v = oracle::micro_vocab();
  const auto m = init_model(oracle::micro_config(11), v);
  Rng rng(21);
  for (int t = 0; t < 100; ++t) {
    const auto src = oracle::random_units(rng, 35, 1, 10);
    const auto g = greedy_decode(m, "A", src, "B");
    const auto b = beam_decode(m, "A", src, "B", DecodeConfig{0, 1, 0.0});
    CHECK(g.output.units == b.output.units);
    CHECK(g.log_prob == b.log_prob);
    CHECK(g.truncated == b.truncated);
    CHECK(g.output.lang == "B");
    check_clean(g.output.units, 35);
  }
}

TEST_CASE("wider beams never score worse") {
  const auto v = oracle::micro_vocab();
  const auto m = init_model(oracle::micro_config(12), v);
  Rng rng(22);
  for (int t = 0; t < 10; ++t) {
    const auto src = oracle::random_units(rng, 35, 2, 8);
    const auto g = greedy_decode(m, "B", src, "A", DecodeConfig{8, 1, 0.0});
    double previous = g.log_prob;
    for (int k = 2; k <= 5; ++k) {
      const auto r = beam_decode(m, "B", src, "A", DecodeConfig{8, k, 0.0});
      CHECK(r.log_prob >= previous - 1e-12);
      previous = r.log_prob;
      check_clean(r.output.units, 35);
      REQUIRE_FALSE(r.nbest.empty());
      std::set<std::vector<int>> seen;
      for (std::size_t i = 0; i < r.nbest.size(); ++i) {
        CHECK(seen.insert(r.nbest[i].units).second);
        if (i > 0) CHECK(r.nbest[i - 1].score >= r.nbest[i].score);
        check_clean(r.nbest[i].units, 35);
      }
      CHECK(r.nbest.front().units == r.output.units);
    }
  }
}

TEST_CASE("length-normalised scores") {
  const auto v = oracle::micro_vocab();
  const auto m = init_model(oracle::micro_config(13), v);
  const auto r = beam_decode(m, "A", {1, 2, 3}, "B", DecodeConfig{6, 3, 1.0});
  for (const auto& h : r.nbest) {
    // score = log_prob / emitted length, with the length a whole number of steps
    CHECK(h.log_prob < 0.0);
    const double len = h.log_prob / h.score;
    CHECK(len == doctest::Approx(std::round(len)).epsilon(1e-9));
    CHECK(std::round(len) >= 1.0);
    CHECK(std::round(len) <= 6.0);
    CHECK(std::round(len) >= static_cast<double>(h.units.size()));
  }
}

TEST_CASE("max_len truncates") {
  const auto v = oracle::micro_vocab();
  const auto m = init_model(oracle::micro_config(14), v);
  Rng rng(23);
  for (int t = 0; t < 20; ++t) {
    const auto src = oracle::random_units(rng, 35, 1, 6);
    const auto g = greedy_decode(m, "A", src, "B", DecodeConfig{1, 1, 0.0});
    CHECK(g.output.units.size() <= 1);
    CHECK(g.truncated == !g.output.units.empty());
    const auto b = beam_decode(m, "A", src, "B", DecodeConfig{1, 4, 1.0});
    CHECK(b.output.units.size() <= 1);
  }
  CHECK_THROWS_AS(greedy_decode(m, "A", {1, 2}, "B", DecodeConfig{-1, 1, 0.0}), Error);
  CHECK_THROWS_AS(beam_decode(m, "A", {1, 2}, "B", DecodeConfig{0, 0, 1.0}), Error);
  CHECK_THROWS_AS(greedy_decode(m, "A", {1, 99}, "B"), Error);
  CHECK_THROWS_AS(greedy_decode(m, "Z", {1, 2}, "B"), Error);
}

TEST_CASE("translate dispatches on the beam settings") {
  const auto v = oracle::micro_vocab();
  const auto m = init_model(oracle::micro_config(15), v);
  const auto t = translate(m, "A", {4, 5, 6}, "B", DecodeConfig{0, 1, 0.0});
  CHECK(t.output.units == greedy_decode(m, "A", {4, 5, 6}, "B").output.units);
  const auto b = translate(m, "A", {4, 5, 6}, "B", DecodeConfig{0, 3, 1.0});
  CHECK(b.output.units == beam_decode(m, "A", {4, 5, 6}, "B", DecodeConfig{0, 3, 1.0}).output.units);
}
