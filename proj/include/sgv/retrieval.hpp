#pragma once

#include "sgv/core.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace sgv {

enum class DescriptorMetric { Euclidean, Cosine };

/// Exact global-descriptor index over the database, in manifest order.
struct DescriptorIndex {
  std::vector<std::string> ids;
  FeatureMatrix descriptors;  // |db| x d
  DescriptorMetric metric = DescriptorMetric::Euclidean;

  std::size_t size() const { return ids.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(descriptors.cols()); }

  Eigen::VectorXd row(std::size_t i) const {
    return descriptors.row(static_cast<Eigen::Index>(i)).cast<double>().transpose();
  }
};

inline DescriptorIndex build_index(std::span<const ScanRecord> database,
                                   DescriptorMetric metric = DescriptorMetric::Euclidean) {
  if (database.empty()) throw Error(ErrorCode::EmptyDatabase, "database is empty");
  const std::size_t d = database.front().descriptor_dim();
  DescriptorIndex index;
  index.metric = metric;
  index.descriptors.resize(static_cast<Eigen::Index>(database.size()), static_cast<Eigen::Index>(d));
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < database.size(); ++i) {
    const auto& s = database[i];
    if (s.descriptor_dim() != d) {
      throw Error(ErrorCode::DimMismatch, "scan '" + s.id + "' has descriptor dim " +
                                              std::to_string(s.descriptor_dim()) + ", expected " + std::to_string(d));
    }
    if (!seen.insert(s.id).second) throw Error(ErrorCode::DuplicateId, "duplicate database id '" + s.id + "'");
    index.ids.push_back(s.id);
    index.descriptors.row(static_cast<Eigen::Index>(i)) = s.global_descriptor.transpose();
  }
  return index;
}

inline double descriptor_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, DescriptorMetric metric) {
  if (metric == DescriptorMetric::Euclidean) return (a - b).norm();
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - a.dot(b) / (na * nb);
}

/// Top-k database entries by ascending descriptor distance; ties keep index order.
inline RankedList query_topk(const DescriptorIndex& index, const Eigen::VectorXd& g, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (static_cast<std::size_t>(g.size()) != index.dim()) {
    throw Error(ErrorCode::DimMismatch, "query descriptor dim " + std::to_string(g.size()) + " vs index dim " +
                                            std::to_string(index.dim()));
  }
  const std::size_t n = index.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = descriptor_distance(g, index.row(i), index.metric);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t take = std::min(k, n);
  auto by_distance = [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), by_distance);

  RankedList out;
  out.ordering = Ordering::AscendingDistance;
  out.entries.reserve(take);
  for (std::size_t r = 0; r < take; ++r) out.entries.push_back({index.ids[order[r]], dist[order[r]]});
  return out;
}

inline RankedList query_topk(const DescriptorIndex& index, const Descriptor& g, std::size_t k) {
  return query_topk(index, Eigen::VectorXd(g.cast<double>()), k);
}

}  // namespace sgv
