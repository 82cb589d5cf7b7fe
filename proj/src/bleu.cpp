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

#include <algorithm>
#include <cmath>
#include <map>

#include "ututlab/error.hpp"
#include "ututlab/evaluation.hpp"

namespace ututlab {
namespace {

using NgramCounts = std::map<std::vector<int>, long long>;

NgramCounts count_ngrams(const std::vector<int>& tokens, int n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    ++counts[std::vector<int>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                              tokens.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  }
  return counts;
}

}  // namespace

BleuReport corpus_bleu(const std::vector<std::vector<int>>& hypotheses, const std::vector<std::vector<int>>& references,
                       const BleuOptions& options) {
  require(hypotheses.size() == references.size(), ErrorKind::kInvalidArgument,
          "hypothesis count " + std::to_string(hypotheses.size()) + " does not match reference count " +
              std::to_string(references.size()));
  require(!references.empty(), ErrorKind::kInvalidArgument, "corpus_bleu needs at least one sentence");
  require(options.max_n >= 1, ErrorKind::kInvalidArgument, "max_n must be at least 1");
  require(options.floor >= 0.0, ErrorKind::kInvalidArgument, "floor must be non-negative");

  const auto n_max = static_cast<std::size_t>(options.max_n);
  BleuReport r;
  r.matches.assign(n_max, 0);
  r.totals.assign(n_max, 0);
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& ref = references[s];
    require(!ref.empty(), ErrorKind::kInvalidArgument, "empty reference at sentence " + std::to_string(s));
    r.hyp_length += static_cast<long long>(hyp.size());
    r.ref_length += static_cast<long long>(ref.size());
    for (std::size_t n = 1; n <= n_max; ++n) {
      const auto hc = count_ngrams(hyp, static_cast<int>(n));
      const auto rc = count_ngrams(ref, static_cast<int>(n));
      for (const auto& [gram, c] : hc) {
        const auto it = rc.find(gram);
        if (it != rc.end()) r.matches[n - 1] += std::min(c, it->second);
        r.totals[n - 1] += c;
      }
    }
  }

  r.precisions.assign(n_max, 0.0);
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < n_max; ++n) {
    if (r.totals[n] == 0) {
      zero = true;
      continue;
    }
    double m = static_cast<double>(r.matches[n]);
    if (m == 0.0 && options.floor > 0.0) m = options.floor;
    r.precisions[n] = m / static_cast<double>(r.totals[n]);
    if (r.precisions[n] == 0.0) {
      zero = true;
    } else {
      log_sum += std::log(r.precisions[n]);
    }
  }

  if (r.hyp_length == 0) {
    r.brevity_penalty = 0.0;
  } else if (r.hyp_length < r.ref_length) {
    r.brevity_penalty = std::exp(1.0 - static_cast<double>(r.ref_length) / static_cast<double>(r.hyp_length));
  }
  r.score = zero ? 0.0 : 100.0 * r.brevity_penalty * std::exp(log_sum / static_cast<double>(n_max));
  return r;
}

long long levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<long long> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<long long>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<long long>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const long long sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double cer(const std::vector<int>& hypothesis, const std::vector<int>& reference) {
  require(!reference.empty(), ErrorKind::kInvalidArgument, "cer needs a nonempty reference");
  return static_cast<double>(levenshtein(hypothesis, reference)) / static_cast<double>(reference.size());
}

}  // namespace ututlab
