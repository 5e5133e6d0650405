#pragma once

#include "sgv/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace sgv {

// Pose success thresholds (inclusive).
inline constexpr double kSuccessTranslation = 2.0;  // meters
inline constexpr double kSuccessRotation = 5.0;     // degrees

struct PoseError {
  double rte = 0.0;  // meters
  double rre = 0.0;  // degrees
};

struct QueryOutcome {
  std::string query_id;
  std::vector<std::string> ranked_before;
  std::vector<std::string> ranked_after;
  std::map<double, std::set<std::string>> positives;  // revisit radius -> positive db ids
  double top1_distance_before = 0.0;
  double top1_distance_after = 0.0;
  // Errors of the pose estimate. When registration fails the estimate falls
  // back to identity, so the errors are still defined but `registered` is false.
  std::optional<PoseError> pose_error;
  bool registered = false;
  double rerank_ms = 0.0;
};

enum class Stage { Before, After };

inline const std::vector<std::string>& ranked(const QueryOutcome& o, Stage stage) {
  return stage == Stage::Before ? o.ranked_before : o.ranked_after;
}

inline std::set<std::string> ground_truth_positives(const ScanRecord& query, std::span<const ScanRecord> database,
                                                    double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be > 0");
  std::set<std::string> out;
  for (const auto& s : database) {
    if (geo_distance(query.geo_location, s.geo_location) <= radius) out.insert(s.id);
  }
  return out;
}

namespace detail {

inline const std::set<std::string>& positives_at(const QueryOutcome& o, double radius) {
  static const std::set<std::string> kEmpty;
  const auto it = o.positives.find(radius);
  return it == o.positives.end() ? kEmpty : it->second;
}

}  // namespace detail

/// Percentage of evaluable queries (at least one positive in the database)
/// whose top-k holds a positive.
inline double recall_at_k(std::span<const QueryOutcome> outcomes, std::size_t k, double radius,
                          Stage stage = Stage::After) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  std::size_t evaluable = 0, hits = 0;
  for (const auto& o : outcomes) {
    const auto& pos = detail::positives_at(o, radius);
    if (pos.empty()) continue;
    ++evaluable;
    const auto& list = ranked(o, stage);
    const std::size_t depth = std::min(k, list.size());
    for (std::size_t i = 0; i < depth; ++i) {
      if (pos.count(list[i])) {
        ++hits;
        break;
      }
    }
  }
  if (evaluable == 0) throw Error(ErrorCode::NoEvaluableQueries, "no query has a positive in the database");
  return 100.0 * static_cast<double>(hits) / static_cast<double>(evaluable);
}

/// Mean of 1/r_q over evaluable queries, as a percentage. A list without a
/// positive contributes 0.
inline double mean_reciprocal_rank(std::span<const QueryOutcome> outcomes, double radius, Stage stage = Stage::After) {
  std::size_t evaluable = 0;
  double sum = 0.0;
  for (const auto& o : outcomes) {
    const auto& pos = detail::positives_at(o, radius);
    if (pos.empty()) continue;
    ++evaluable;
    const auto& list = ranked(o, stage);
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (pos.count(list[i])) {
        sum += 1.0 / static_cast<double>(i + 1);
        break;
      }
    }
  }
  if (evaluable == 0) throw Error(ErrorCode::NoEvaluableQueries, "no query has a positive in the database");
  return 100.0 * sum / static_cast<double>(evaluable);
}

struct Eq3Summary {
  std::size_t violations = 0;
  double mean_top1_before = 0.0;
  double mean_top1_after = 0.0;
};

/// Top-1 instance of the re-ranking success inequality: counts evaluable
/// queries whose top-1 geo distance grew after re-ranking. Queries without a
/// positive within `radius` are skipped.
inline Eq3Summary eq3_violations(std::span<const QueryOutcome> outcomes, double radius) {
  Eq3Summary s;
  std::size_t count = 0;
  for (const auto& o : outcomes) {
    if (detail::positives_at(o, radius).empty()) continue;
    ++count;
    if (o.top1_distance_after > o.top1_distance_before) ++s.violations;
    s.mean_top1_before += o.top1_distance_before;
    s.mean_top1_after += o.top1_distance_after;
  }
  if (count > 0) {
    s.mean_top1_before /= static_cast<double>(count);
    s.mean_top1_after /= static_cast<double>(count);
  }
  return s;
}

/// RTE and RRE between an estimated and a ground-truth relative transform.
inline PoseError pose_errors(const RigidTransform& est, const RigidTransform& gt) {
  PoseError e;
  e.rte = (est.translation() - gt.translation()).norm();
  const double c = ((gt.rotation().transpose() * est.rotation()).trace() - 1.0) / 2.0;
  e.rre = rad2deg(std::acos(std::clamp(c, -1.0, 1.0)));
  return e;
}

inline bool is_success(const PoseError& e) {
  return e.rte <= kSuccessTranslation && e.rre <= kSuccessRotation;
}

/// Over all queries; a query whose registration failed is unsuccessful.
inline double success_rate(std::span<const QueryOutcome> outcomes) {
  if (outcomes.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& o : outcomes) {
    if (o.registered && o.pose_error && is_success(*o.pose_error)) ++ok;
  }
  return 100.0 * static_cast<double>(ok) / static_cast<double>(outcomes.size());
}

struct MetricReport {
  std::map<double, std::map<std::size_t, double>> recall_at;  // radius -> k -> %
  std::map<double, double> mrr;                                // radius -> %
  double success_rate = 0.0;
  double mean_rte = 0.0;
  double mean_rre = 0.0;
};

/// Aggregates recall/MRR at every radius and k. Radii without evaluable
/// queries are left out. Pose statistics cover queries with a pose estimate.
inline MetricReport compute_report(std::span<const QueryOutcome> outcomes, std::span<const double> radii,
                                   std::span<const std::size_t> ks, Stage stage = Stage::After) {
  MetricReport r;
  for (double radius : radii) {
    try {
      for (std::size_t k : ks) r.recall_at[radius][k] = recall_at_k(outcomes, k, radius, stage);
      r.mrr[radius] = mean_reciprocal_rank(outcomes, radius, stage);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoEvaluableQueries) throw;
      r.recall_at.erase(radius);
    }
  }
  r.success_rate = success_rate(outcomes);
  std::size_t posed = 0;
  for (const auto& o : outcomes) {
    if (!o.pose_error) continue;
    ++posed;
    r.mean_rte += o.pose_error->rte;
    r.mean_rre += o.pose_error->rre;
  }
  if (posed > 0) {
    r.mean_rte /= static_cast<double>(posed);
    r.mean_rre /= static_cast<double>(posed);
  }
  return r;
}

}  // namespace sgv
