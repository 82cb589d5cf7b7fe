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

// Discrete unit codec: k-means codebook fitting, nearest-centroid
// quantization, run-length deduplication and mock resynthesis.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ututlab/tensor.hpp"

namespace ututlab {

struct FeatureStream {
  std::string utt_id;
  std::string lang;
  Mat frames;  // T x D
  double frame_rate = 50.0;

  int num_frames() const { return static_cast<int>(frames.rows()); }
  int dim() const { return static_cast<int>(frames.cols()); }
};

struct UnitSequence {
  std::string utt_id;
  std::string lang;
  std::vector<int> units;
  bool deduped = false;

  bool operator==(const UnitSequence&) const = default;
};

struct FitStats {
  int iterations = 0;
  double final_sse = 0.0;
  std::vector<double> sse_history;  // SSE after each Lloyd iteration
};

struct Codebook {
  Mat centroids;  // K x D
  std::uint64_t seed = 0;
  FitStats fit_stats;

  int k() const { return static_cast<int>(centroids.rows()); }
  int dim() const { return static_cast<int>(centroids.cols()); }
};

struct KMeansOptions {
  int k = 1000;
  std::uint64_t seed = 0;
  int max_iters = 100;
  double tol = 1e-6;
};

/// Lloyd's algorithm with k-means++ seeding. Points are the rows of
/// `points`. Requires at least `k` distinct rows and finite values.
/// Centroids are rounded to float32 precision so that the codebook file
/// round trip is exact.
Codebook fit_codebook(const Mat& points, const KMeansOptions& options);

// Nearest centroid for each row (squared Euclidean, lowest index wins ties).
std::vector<int> assign_nearest(const Mat& points, const Mat& centroids);
double sum_squared_error(const Mat& points, const Mat& centroids, const std::vector<int>& assignment);

struct LloydStep {
  Mat centroids;
  std::vector<int> assignment;
  double sse_before = 0.0;  // with the incoming centroids
  double sse_after = 0.0;   // with the updated centroids
};

// One assignment + empty-cluster repair + mean update.
LloydStep lloyd_iteration(const Mat& points, const Mat& centroids);

UnitSequence quantize(const FeatureStream& stream, const Codebook& codebook);

UnitSequence deduplicate(const UnitSequence& seq);

// Mock resynthesis: each unit emits its centroid `dwell` times.
FeatureStream expand(const UnitSequence& seq, const Codebook& codebook, int dwell = 4);

// (unit id, count) pairs, count descending then id ascending.
using UnitHistogram = std::vector<std::pair<int, long long>>;

UnitHistogram unit_histogram(const std::vector<UnitSequence>& corpus, const std::string& lang);

// Stacks every frame of every stream into one matrix (rows = frames).
Mat stack_frames(const std::vector<FeatureStream>& streams);

// Per-dimension standardization fitted on a set of streams.
struct Standardizer {
  RowVec mean;
  RowVec scale;

  static Standardizer fit(const std::vector<FeatureStream>& streams);
  void apply(FeatureStream& stream) const;
};

void save_features(const std::filesystem::path& path, const FeatureStream& stream);
FeatureStream load_features(const std::filesystem::path& path);

void save_codebook(const std::filesystem::path& path, const Codebook& codebook);
Codebook load_codebook(const std::filesystem::path& path);

void write_unit_manifest(const std::filesystem::path& path, const std::vector<UnitSequence>& seqs,
                         const std::string& config_hash = {});
std::vector<UnitSequence> read_unit_manifest(const std::filesystem::path& path);

}  // namespace ututlab
