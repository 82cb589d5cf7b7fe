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

#include "ututlab/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ututlab/error.hpp"
#include "ututlab/io.hpp"
#include "ututlab/rng.hpp"

namespace ututlab {
namespace {

constexpr std::uint32_t kFeatureVersion = 1;
constexpr std::uint32_t kCodebookVersion = 1;

double squared_distance(const Mat& a, Eigen::Index i, const Mat& b, Eigen::Index j) {
  double d = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double diff = a(i, c) - b(j, c);
    d += diff * diff;
  }
  return d;
}

int count_distinct_rows(const Mat& points) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  auto row_less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), row_less);
  int distinct = order.empty() ? 0 : 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (row_less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

// k-means++: first centre uniform, then proportional to squared distance.
Mat seed_plus_plus(const Mat& points, int k, Rng& rng) {
  const auto n = points.rows();
  Mat centroids(k, points.cols());
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  Eigen::Index pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  for (int c = 0; c < k; ++c) {
    centroids.row(c) = points.row(pick);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      best[i] = std::min(best[i], squared_distance(points, i, centroids, c));
      total += best[i];
    }
    if (c + 1 == k) break;
    const double target = rng.uniform() * total;
    double acc = 0.0;
    pick = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (best[i] <= 0.0) continue;
      acc += best[i];
      pick = i;
      if (acc > target) break;
    }
  }
  return centroids;
}

void round_to_float(Mat& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
  }
}

}  // namespace

std::vector<int> assign_nearest(const Mat& points, const Mat& centroids) {
  require(points.cols() == centroids.cols(), ErrorKind::kInvalidArgument,
          "dimension mismatch: features have D=" + std::to_string(points.cols()) +
              ", codebook has D=" + std::to_string(centroids.cols()));
  std::vector<int> out(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
      const double d = squared_distance(points, i, centroids, j);
      if (d < best) {
        best = d;
        arg = static_cast<int>(j);
      }
    }
    out[static_cast<std::size_t>(i)] = arg;
  }
  return out;
}

double sum_squared_error(const Mat& points, const Mat& centroids, const std::vector<int>& assignment) {
  double sse = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    sse += squared_distance(points, i, centroids, assignment[static_cast<std::size_t>(i)]);
  }
  return sse;
}

LloydStep lloyd_iteration(const Mat& points, const Mat& centroids) {
  const auto k = centroids.rows();
  LloydStep step;
  step.assignment = assign_nearest(points, centroids);
  step.sse_before = sum_squared_error(points, centroids, step.assignment);

  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int a : step.assignment) ++sizes[static_cast<std::size_t>(a)];

  // Empty clusters take the point farthest from its current centroid. The
  // moved point drops to zero error, so SSE cannot increase.
  std::vector<bool> donated(static_cast<std::size_t>(points.rows()), false);
  for (Eigen::Index c = 0; c < k; ++c) {
    if (sizes[static_cast<std::size_t>(c)] > 0) continue;
    double far = -1.0;
    Eigen::Index who = -1;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const auto a = step.assignment[static_cast<std::size_t>(i)];
      if (donated[static_cast<std::size_t>(i)] || sizes[static_cast<std::size_t>(a)] <= 1) continue;
      const double d = squared_distance(points, i, centroids, a);
      if (d > far) {
        far = d;
        who = i;
      }
    }
    if (who < 0) continue;
    --sizes[static_cast<std::size_t>(step.assignment[static_cast<std::size_t>(who)])];
    step.assignment[static_cast<std::size_t>(who)] = static_cast<int>(c);
    sizes[static_cast<std::size_t>(c)] = 1;
    donated[static_cast<std::size_t>(who)] = true;
  }

  Mat sums = Mat::Zero(k, points.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    sums.row(step.assignment[static_cast<std::size_t>(i)]) += points.row(i);
  }
  step.centroids = centroids;
  for (Eigen::Index c = 0; c < k; ++c) {
    if (sizes[static_cast<std::size_t>(c)] > 0) {
      step.centroids.row(c) = sums.row(c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    }
  }
  step.sse_after = sum_squared_error(points, step.centroids, step.assignment);
  return step;
}

Codebook fit_codebook(const Mat& points, const KMeansOptions& options) {
  require(options.k >= 2, ErrorKind::kInvalidArgument, "k must be at least 2");
  require(options.max_iters >= 1, ErrorKind::kInvalidArgument, "max_iters must be at least 1");
  require(points.allFinite(), ErrorKind::kInvalidArgument, "non-finite value in k-means input");
  require(count_distinct_rows(points) >= options.k, ErrorKind::kInvalidArgument,
          "insufficient distinct points for k=" + std::to_string(options.k));

  Rng rng(options.seed);
  Codebook cb;
  cb.seed = options.seed;
  Mat centroids = seed_plus_plus(points, options.k, rng);

  double previous = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < options.max_iters; ++iter) {
    LloydStep step = lloyd_iteration(points, centroids);
    centroids = std::move(step.centroids);
    cb.fit_stats.sse_history.push_back(step.sse_after);
    cb.fit_stats.iterations = iter + 1;
    const double improvement = previous - step.sse_after;
    const bool converged = step.sse_after == 0.0 ||
                           (std::isfinite(previous) && improvement < options.tol * previous);
    previous = step.sse_after;
    if (converged) break;
  }

  round_to_float(centroids);
  cb.fit_stats.final_sse = sum_squared_error(points, centroids, assign_nearest(points, centroids));
  cb.centroids = std::move(centroids);
  for (Eigen::Index a = 0; a < cb.centroids.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < cb.centroids.rows(); ++b) {
      require(squared_distance(cb.centroids, a, cb.centroids, b) > 0.0, ErrorKind::kNumeric,
              "k-means produced coincident centroids");
    }
  }
  return cb;
}

UnitSequence quantize(const FeatureStream& stream, const Codebook& codebook) {
  UnitSequence out;
  out.utt_id = stream.utt_id;
  out.lang = stream.lang;
  out.units = assign_nearest(stream.frames, codebook.centroids);
  out.deduped = false;
  return out;
}

UnitSequence deduplicate(const UnitSequence& seq) {
  require(!seq.units.empty(), ErrorKind::kInvalidArgument, "cannot deduplicate an empty sequence");
  UnitSequence out{seq.utt_id, seq.lang, {}, true};
  out.units.reserve(seq.units.size());
  for (int u : seq.units) {
    if (out.units.empty() || out.units.back() != u) out.units.push_back(u);
  }
  return out;
}

FeatureStream expand(const UnitSequence& seq, const Codebook& codebook, int dwell) {
  require(dwell >= 1, ErrorKind::kInvalidArgument, "dwell must be at least 1");
  require(!seq.units.empty(), ErrorKind::kInvalidArgument, "cannot expand an empty sequence");
  FeatureStream out;
  out.utt_id = seq.utt_id;
  out.lang = seq.lang;
  out.frames.resize(static_cast<Eigen::Index>(seq.units.size()) * dwell, codebook.dim());
  Eigen::Index row = 0;
  for (int u : seq.units) {
    require(u >= 0 && u < codebook.k(), ErrorKind::kInvalidArgument,
            "unit id " + std::to_string(u) + " outside codebook of size " + std::to_string(codebook.k()));
    for (int r = 0; r < dwell; ++r) out.frames.row(row++) = codebook.centroids.row(u);
  }
  return out;
}

UnitHistogram unit_histogram(const std::vector<UnitSequence>& corpus, const std::string& lang) {
  std::map<int, long long> counts;
  bool seen = false;
  for (const auto& seq : corpus) {
    if (seq.lang != lang || seq.units.empty()) continue;
    seen = true;
    for (int u : deduplicate(seq).units) ++counts[u];
  }
  require(seen, ErrorKind::kInvalidArgument, "no sequences for language '" + lang + "'");
  UnitHistogram out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

Mat stack_frames(const std::vector<FeatureStream>& streams) {
  Eigen::Index rows = 0;
  const Eigen::Index dim = streams.empty() ? 0 : streams.front().frames.cols();
  for (const auto& s : streams) {
    require(s.frames.cols() == dim, ErrorKind::kInvalidArgument, "feature dimension differs across streams");
    rows += s.frames.rows();
  }
  Mat out(rows, dim);
  Eigen::Index at = 0;
  for (const auto& s : streams) {
    out.middleRows(at, s.frames.rows()) = s.frames;
    at += s.frames.rows();
  }
  return out;
}

Standardizer Standardizer::fit(const std::vector<FeatureStream>& streams) {
  const Mat all = stack_frames(streams);
  require(all.rows() > 0, ErrorKind::kInvalidArgument, "no frames to standardize");
  Standardizer s;
  s.mean = all.colwise().mean();
  const Mat centered = all.rowwise() - s.mean;
  s.scale = (centered.array().square().colwise().sum() / static_cast<double>(all.rows())).sqrt();
  for (Eigen::Index c = 0; c < s.scale.size(); ++c) {
    if (s.scale(c) <= 0.0) s.scale(c) = 1.0;
  }
  return s;
}

void Standardizer::apply(FeatureStream& stream) const {
  require(stream.frames.cols() == mean.size(), ErrorKind::kInvalidArgument, "standardizer dimension mismatch");
  stream.frames = (stream.frames.rowwise() - mean).array().rowwise() / scale.array();
}

void save_features(const std::filesystem::path& path, const FeatureStream& stream) {
  io::BinaryWriter w(path);
  w.bytes("UFEA");
  w.u32(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(stream.dim()));
  w.u32(static_cast<std::uint32_t>(stream.num_frames()));
  for (Eigen::Index i = 0; i < stream.frames.size(); ++i) w.f32(static_cast<float>(stream.frames.data()[i]));
  w.close();
}

FeatureStream load_features(const std::filesystem::path& path) {
  io::BinaryReader r(path);
  require(r.bytes(4) == "UFEA", ErrorKind::kFormat, "bad magic in feature file " + path.string());
  const auto version = r.u32();
  require(version == kFeatureVersion, ErrorKind::kFormat,
          "unsupported feature file version " + std::to_string(version));
  const auto d = r.u32();
  const auto t = r.u32();
  require(t >= 1 && d >= 1, ErrorKind::kFormat, "empty feature stream in " + path.string());
  FeatureStream out;
  out.utt_id = path.stem().string();
  out.frames.resize(t, d);
  for (Eigen::Index i = 0; i < out.frames.size(); ++i) out.frames.data()[i] = r.f32();
  require(out.frames.allFinite(), ErrorKind::kFormat, "non-finite feature value in " + path.string());
  return out;
}

void save_codebook(const std::filesystem::path& path, const Codebook& codebook) {
  io::BinaryWriter w(path);
  w.bytes("UCBK");
  w.u32(kCodebookVersion);
  w.u32(static_cast<std::uint32_t>(codebook.k()));
  w.u32(static_cast<std::uint32_t>(codebook.dim()));
  w.u64(codebook.seed);
  for (Eigen::Index i = 0; i < codebook.centroids.size(); ++i) {
    w.f32(static_cast<float>(codebook.centroids.data()[i]));
  }
  w.close();
}

Codebook load_codebook(const std::filesystem::path& path) {
  io::BinaryReader r(path);
  require(r.bytes(4) == "UCBK", ErrorKind::kFormat, "bad magic in codebook file " + path.string());
  const auto version = r.u32();
  require(version == kCodebookVersion, ErrorKind::kFormat,
          "unsupported codebook version " + std::to_string(version));
  const auto k = r.u32();
  const auto d = r.u32();
  require(k >= 2 && d >= 1, ErrorKind::kFormat, "degenerate codebook shape in " + path.string());
  Codebook cb;
  cb.seed = r.u64();
  cb.centroids.resize(k, d);
  for (Eigen::Index i = 0; i < cb.centroids.size(); ++i) cb.centroids.data()[i] = r.f32();
  require(cb.centroids.allFinite(), ErrorKind::kFormat, "non-finite centroid in " + path.string());
  return cb;
}

void write_unit_manifest(const std::filesystem::path& path, const std::vector<UnitSequence>& seqs,
                         const std::string& config_hash) {
  auto out = io::open_text_output(path, config_hash);
  for (const auto& s : seqs) {
    out << s.utt_id << '\t' << s.lang << '\t' << io::join_ints(s.units) << '\n';
  }
  require(out.good(), ErrorKind::kIo, "write failed: " + path.string());
}

std::vector<UnitSequence> read_unit_manifest(const std::filesystem::path& path) {
  std::vector<UnitSequence> out;
  for (const auto& line : io::read_data_lines(path)) {
    const auto fields = io::split(line, '\t');
    require(fields.size() == 3, ErrorKind::kFormat, "unit manifest line needs 3 fields: " + line);
    UnitSequence s{fields[0], fields[1], io::parse_ints(fields[2]), false};
    require(!s.units.empty(), ErrorKind::kFormat, "empty unit sequence for " + s.utt_id);
    s.deduped = std::adjacent_find(s.units.begin(), s.units.end()) == s.units.end();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ututlab
