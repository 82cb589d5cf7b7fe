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

OptimizerState OptimizerState::zeros_for(const Parameters& params, const AdamConfig& config) {
  OptimizerState s;
  s.config = config;
  s.first_moment = zeros_like(params);
  s.second_moment = zeros_like(params);
  return s;
}

double global_grad_norm(const Parameters& grads) {
  double sq = 0.0;
  for_each_tensor(grads, [&](const std::string&, const Mat& g) { sq += g.squaredNorm(); });
  return std::sqrt(sq);
}

void adam_step(Parameters& params, const Parameters& grads, OptimizerState& state, double lr) {
  std::vector<Mat*> p, m, v;
  std::vector<const Mat*> g;
  std::vector<std::string> names;
  for_each_tensor(params, [&](const std::string& name, Mat& t) {
    p.push_back(&t);
    names.push_back(name);
  });
  for_each_tensor(grads, [&](const std::string&, const Mat& t) { g.push_back(&t); });
  for_each_tensor(state.first_moment, [&](const std::string&, Mat& t) { m.push_back(&t); });
  for_each_tensor(state.second_moment, [&](const std::string&, Mat& t) { v.push_back(&t); });
  require(g.size() == p.size() && m.size() == p.size() && v.size() == p.size(), ErrorKind::kInvalidArgument,
          "optimizer state does not match parameters");
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(g[i]->rows() == p[i]->rows() && g[i]->cols() == p[i]->cols() && m[i]->rows() == p[i]->rows() &&
                m[i]->cols() == p[i]->cols(),
            ErrorKind::kInvalidArgument, "shape mismatch for " + names[i]);
    require(g[i]->allFinite(), ErrorKind::kNumeric, "non-finite gradient in " + names[i]);
  }

  const auto& cfg = state.config;
  double clip = 1.0;
  if (cfg.clip_norm > 0.0) {
    const double norm = global_grad_norm(grads);
    if (norm > cfg.clip_norm) clip = cfg.clip_norm / norm;
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto mi = m[i]->array();
    auto vi = v[i]->array();
    const auto gi = g[i]->array() * clip;
    mi = cfg.beta1 * mi + (1.0 - cfg.beta1) * gi;
    vi = cfg.beta2 * vi + (1.0 - cfg.beta2) * gi.square();
    p[i]->array() -= lr * (mi / c1) / ((vi / c2).sqrt() + cfg.epsilon);
  }
}

}  // namespace ututlab
