#pragma once

#include "sgv/core.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace sgv {

struct Correspondence {
  Point3 query_point;
  Point3 candidate_point;
  std::uint32_t query_index = 0;
  std::uint32_t candidate_index = 0;
  double feature_distance = 0.0;
};

struct CorrespondenceSet {
  std::vector<Correspondence> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  const Correspondence& operator[](std::size_t i) const { return pairs[i]; }
};

/// Deterministic uniform-stride subsample: index floor(i * N / n_max) for
/// i < n_max, or every point when N <= n_max.
inline std::vector<std::uint32_t> sample_query_points(const ScanRecord& scan, std::size_t n_max) {
  if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1");
  const std::size_t n = scan.size();
  if (n == 0) throw Error(ErrorCode::EmptyScan, "scan '" + scan.id + "' has no points");
  const std::size_t count = std::min(n, n_max);
  std::vector<std::uint32_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = static_cast<std::uint32_t>((static_cast<std::uint64_t>(i) * n) / count);
  }
  return out;
}

namespace detail {

inline double feature_sq_distance(const FeatureMatrix& a, Eigen::Index ia, const FeatureMatrix& b, Eigen::Index ib) {
  double acc = 0.0;
  const float* pa = a.row(ia).data();
  const float* pb = b.row(ib).data();
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double d = static_cast<double>(pa[c]) - static_cast<double>(pb[c]);
    acc += d * d;
  }
  return acc;
}

}  // namespace detail

/// Nearest-neighbour correspondences from the given query sample into the
/// candidate, by L2 distance on local features. Ties resolve to the smallest
/// candidate index. With `mutual`, a pair survives only if the query point is
/// also the nearest sampled query point of its match (ties: smallest index).
inline CorrespondenceSet match_features(const ScanRecord& query, const ScanRecord& candidate,
                                        std::span<const std::uint32_t> sample, bool mutual = false) {
  if (query.feature_dim() != candidate.feature_dim()) {
    throw Error(ErrorCode::DimMismatch, "feature dims differ: " + std::to_string(query.feature_dim()) + " vs " +
                                            std::to_string(candidate.feature_dim()));
  }
  if (query.size() == 0 || candidate.size() == 0) {
    throw Error(ErrorCode::EmptyScan, "cannot match against an empty scan");
  }

  const auto& qf = query.local_features;
  const auto& cf = candidate.local_features;
  const Eigen::Index nc = cf.rows();

  std::vector<std::uint32_t> forward(sample.size());
  std::vector<double> forward_dist(sample.size());
  for (std::size_t s = 0; s < sample.size(); ++s) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_j = 0;
    for (Eigen::Index j = 0; j < nc; ++j) {
      const double d = detail::feature_sq_distance(qf, sample[s], cf, j);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    forward[s] = static_cast<std::uint32_t>(best_j);
    forward_dist[s] = best;
  }

  CorrespondenceSet out;
  out.pairs.reserve(sample.size());
  for (std::size_t s = 0; s < sample.size(); ++s) {
    if (mutual) {
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t back = 0;
      for (std::size_t t = 0; t < sample.size(); ++t) {
        const double d = detail::feature_sq_distance(cf, forward[s], qf, sample[t]);
        if (d < best || (d == best && sample[t] < back)) {
          best = d;
          back = sample[t];
        }
      }
      if (back != sample[s]) continue;
    }
    Correspondence c;
    c.query_index = sample[s];
    c.candidate_index = forward[s];
    c.query_point = query.point(sample[s]);
    c.candidate_point = candidate.point(forward[s]);
    c.feature_distance = std::sqrt(forward_dist[s]);
    out.pairs.push_back(c);
  }
  return out;
}

inline CorrespondenceSet match_features(const ScanRecord& query, const ScanRecord& candidate, std::size_t n_max,
                                        bool mutual = false) {
  const auto sample = sample_query_points(query, n_max);
  return match_features(query, candidate, sample, mutual);
}

}  // namespace sgv
