#pragma once

#include "sgv/core.hpp"
#include "sgv/matching.hpp"
#include "sgv/parallel.hpp"
#include "sgv/registration.hpp"
#include "sgv/retrieval.hpp"
#include "sgv/spectral.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sgv {

enum class Strategy { None, SpectralGV, RansacRIR, AverageQE, AlphaQE };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::None: return "none";
    case Strategy::SpectralGV: return "spectralgv";
    case Strategy::RansacRIR: return "ransac_rir";
    case Strategy::AverageQE: return "average_qe";
    case Strategy::AlphaQE: return "alpha_qe";
  }
  return "none";
}

inline std::optional<Strategy> parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::None, Strategy::SpectralGV, Strategy::RansacRIR, Strategy::AverageQE,
                     Strategy::AlphaQE}) {
    if (name == to_string(s)) return s;
  }
  if (name == "sgv") return Strategy::SpectralGV;
  if (name == "rir") return Strategy::RansacRIR;
  if (name == "baseline") return Strategy::None;
  return std::nullopt;
}

struct RerankParams {
  std::size_t n_topk = 20;
  Strategy strategy = Strategy::SpectralGV;
  SpectralParams spectral;
  RansacParams ransac;
  double alpha = 3.0;
  std::optional<std::size_t> n_qe;  // defaults to n_topk
  std::size_t threads = 0;

  std::size_t qe_depth() const { return n_qe.value_or(n_topk); }

  void validate() const {
    if (n_topk < 1) throw Error(ErrorCode::InvalidArgument, "n_topk must be >= 1");
    if (strategy == Strategy::AlphaQE && !(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be > 0");
  }
};

/// Id -> scan lookup over a scan list that outlives the catalog.
class ScanCatalog {
 public:
  ScanCatalog() = default;
  explicit ScanCatalog(std::span<const ScanRecord> scans) {
    by_id_.reserve(scans.size());
    for (const auto& s : scans) by_id_.emplace(s.id, &s);
  }

  const ScanRecord& at(const std::string& id) const {
    const auto it = by_id_.find(id);
    if (it == by_id_.end()) throw Error(ErrorCode::UnresolvedCandidate, "candidate '" + id + "' not in catalog");
    return *it->second;
  }

 private:
  std::unordered_map<std::string, const ScanRecord*> by_id_;
};

/// Stable re-order of the first `depth` entries by descending fitness; the
/// tail keeps its original order and scores.
inline RankedList reorder_by_fitness(const RankedList& lr, std::size_t depth, std::span<const double> fitness) {
  RankedList out;
  out.ordering = Ordering::DescendingFitness;
  out.reranked = depth;
  std::vector<std::size_t> order(depth);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
  out.entries.reserve(lr.size());
  for (std::size_t i : order) out.entries.push_back({lr[i].id, fitness[i]});
  for (std::size_t i = depth; i < lr.size(); ++i) out.entries.push_back(lr[i]);
  return out;
}

namespace detail {

inline std::vector<const ScanRecord*> resolve_prefix(const RankedList& lr, std::size_t depth,
                                                     const ScanCatalog& catalog) {
  std::vector<const ScanRecord*> out(depth);
  for (std::size_t i = 0; i < depth; ++i) out[i] = &catalog.at(lr[i].id);
  return out;
}

}  // namespace detail

/// Re-ranks the top n_topk candidates by the spectral fitness s*. All
/// candidates are matched against one shared query sample.
inline RankedList rerank_spectral(const ScanRecord& query, const ScanCatalog& candidates, const RankedList& lr,
                                  const RerankParams& params) {
  params.validate();
  if (lr.empty()) throw Error(ErrorCode::InvalidArgument, "ranked list is empty");
  const std::size_t depth = std::min(params.n_topk, lr.size());
  const auto scans = detail::resolve_prefix(lr, depth, candidates);
  const auto sample = sample_query_points(query, params.spectral.n_max);

  std::vector<double> fitness(depth, 0.0);
  parallel_for(depth, params.threads, [&](std::size_t i) {
    fitness[i] = score_candidate(query, sample, *scans[i], params.spectral).s_star;
  });
  return reorder_by_fitness(lr, depth, fitness);
}

/// Registered-inlier-ratio baseline: RANSAC per candidate, fitness is the
/// inlier ratio after registration. Candidates that cannot be registered
/// score 0.
inline RankedList rerank_rir(const ScanRecord& query, const ScanCatalog& candidates, const RankedList& lr,
                             const RerankParams& params) {
  params.validate();
  if (lr.empty()) throw Error(ErrorCode::InvalidArgument, "ranked list is empty");
  const std::size_t depth = std::min(params.n_topk, lr.size());
  const auto scans = detail::resolve_prefix(lr, depth, candidates);
  const auto sample = sample_query_points(query, params.spectral.n_max);

  std::vector<double> fitness(depth, 0.0);
  parallel_for(depth, params.threads, [&](std::size_t i) {
    const CorrespondenceSet corrs = match_features(query, *scans[i], sample, params.spectral.mutual);
    if (corrs.size() < params.ransac.min_sample) return;
    RansacParams rp = params.ransac;
    rp.seed ^= static_cast<std::uint64_t>(i);
    try {
      fitness[i] = ransac_register(corrs, rp).inlier_ratio;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateConfiguration && e.code() != ErrorCode::TooFewCorrespondences) throw;
    }
  });
  return reorder_by_fitness(lr, depth, fitness);
}

/// Average query expansion: mean of g and the first n_qe candidate
/// descriptors, then a fresh top-k retrieval.
inline RankedList rerank_average_qe(const DescriptorIndex& index, const Eigen::VectorXd& g, const RankedList& lr,
                                    std::size_t n_qe, std::size_t k) {
  if (static_cast<std::size_t>(g.size()) != index.dim()) throw Error(ErrorCode::DimMismatch, "query descriptor dim");
  if (n_qe > lr.size()) throw Error(ErrorCode::InvalidArgument, "n_qe exceeds ranked list length");
  std::unordered_map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < n_qe; ++i) row.emplace(lr[i].id, 0);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (auto it = row.find(index.ids[r]); it != row.end()) it->second = r;
  }
  Eigen::VectorXd sum = g;
  for (std::size_t i = 0; i < n_qe; ++i) sum += index.row(row.at(lr[i].id));
  return query_topk(index, Eigen::VectorXd(sum / static_cast<double>(n_qe + 1)), k);
}

/// Alpha query expansion: unit-normalised descriptors weighted by
/// max(0, cos(g, g_i))^alpha, the query itself with weight 1. The expanded
/// query is rescaled to the norm of g so it lives on the same scale as the
/// index under either metric; for n_qe = 0 it is exactly g.
inline RankedList rerank_alpha_qe(const DescriptorIndex& index, const Eigen::VectorXd& g, const RankedList& lr,
                                  std::size_t n_qe, double alpha, std::size_t k) {
  if (static_cast<std::size_t>(g.size()) != index.dim()) throw Error(ErrorCode::DimMismatch, "query descriptor dim");
  if (n_qe > lr.size()) throw Error(ErrorCode::InvalidArgument, "n_qe exceeds ranked list length");
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be > 0");
  const double gnorm = g.norm();
  if (gnorm == 0.0) throw Error(ErrorCode::ZeroVector, "query descriptor is zero");
  if (n_qe == 0) return query_topk(index, g, k);

  std::unordered_map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < n_qe; ++i) row.emplace(lr[i].id, 0);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (auto it = row.find(index.ids[r]); it != row.end()) it->second = r;
  }
  const Eigen::VectorXd gu = g / gnorm;
  Eigen::VectorXd sum = gu;
  for (std::size_t i = 0; i < n_qe; ++i) {
    const Eigen::VectorXd gi = index.row(row.at(lr[i].id));
    const double ni = gi.norm();
    if (ni == 0.0) continue;
    const Eigen::VectorXd giu = gi / ni;
    const double w = std::pow(std::max(0.0, gu.dot(giu)), alpha);
    sum += w * giu;
  }
  const double snorm = sum.norm();
  if (snorm == 0.0) throw Error(ErrorCode::ZeroVector, "expanded query collapsed to zero");
  return query_topk(index, Eigen::VectorXd(sum * (gnorm / snorm)), k);
}

/// Everything a strategy may need for one query.
struct RerankContext {
  const DescriptorIndex* index = nullptr;
  const ScanCatalog* catalog = nullptr;
  std::size_t retrieval_depth = 0;  // list length for re-retrieving strategies
};

inline RankedList apply_strategy(const ScanRecord& query, const RankedList& lr, const RerankContext& ctx,
                                 const RerankParams& params) {
  switch (params.strategy) {
    case Strategy::None: return lr;
    case Strategy::SpectralGV: return rerank_spectral(query, *ctx.catalog, lr, params);
    case Strategy::RansacRIR: return rerank_rir(query, *ctx.catalog, lr, params);
    case Strategy::AverageQE:
      return rerank_average_qe(*ctx.index, query.global_descriptor.cast<double>(), lr,
                               std::min(params.qe_depth(), lr.size()), ctx.retrieval_depth);
    case Strategy::AlphaQE:
      return rerank_alpha_qe(*ctx.index, query.global_descriptor.cast<double>(), lr,
                             std::min(params.qe_depth(), lr.size()), params.alpha, ctx.retrieval_depth);
  }
  return lr;
}

}  // namespace sgv
