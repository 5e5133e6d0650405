#pragma once

#include "sgv/core.hpp"
#include "sgv/matching.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace sgv {

struct RansacParams {
  double inlier_threshold = 0.5;  // meters
  std::size_t max_iterations = 1000;
  std::size_t min_sample = 3;
  std::uint64_t seed = 0;
  double confidence = 0.999;
};

struct RegistrationResult {
  RigidTransform transform;
  std::vector<bool> inlier_mask;
  double inlier_ratio = 0.0;
};

using PointPair = std::pair<Point3, Point3>;

namespace detail {

// Relative size of the second singular value of the centred source points
// below which the sample counts as collinear.
inline constexpr double kCollinearRatio = 1e-9;

}  // namespace detail

/// Least-squares rigid transform T minimising sum |T x_i - y_i|^2 (Kabsch /
/// Umeyama without scale). Reflections are excluded by the determinant fix.
inline RigidTransform kabsch_fit(std::span<const PointPair> pairs) {
  if (pairs.size() < 3) {
    throw Error(ErrorCode::DegenerateConfiguration, "kabsch needs >= 3 pairs, got " + std::to_string(pairs.size()));
  }
  Point3 cx = Point3::Zero(), cy = Point3::Zero();
  for (const auto& [x, y] : pairs) {
    cx += x;
    cy += y;
  }
  cx /= static_cast<double>(pairs.size());
  cy /= static_cast<double>(pairs.size());

  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d spread = Eigen::Matrix3d::Zero();
  for (const auto& [x, y] : pairs) {
    const Point3 dx = x - cx;
    cross += (y - cy) * dx.transpose();
    spread += dx * dx.transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> spread_svd(spread);
  const auto sv = spread_svd.singularValues();
  if (sv(0) <= 0.0 || sv(1) <= detail::kCollinearRatio * sv(0)) {
    throw Error(ErrorCode::DegenerateConfiguration, "source points are collinear");
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Eigen::Matrix3d rotation = svd.matrixU() * d * svd.matrixV().transpose();
  return RigidTransform(rotation, cy - rotation * cx);
}

inline RigidTransform kabsch_fit(const CorrespondenceSet& corrs) {
  std::vector<PointPair> pairs;
  pairs.reserve(corrs.size());
  for (const auto& c : corrs.pairs) pairs.emplace_back(c.query_point, c.candidate_point);
  return kabsch_fit(pairs);
}

inline double registered_inlier_ratio(const CorrespondenceSet& corrs, const RigidTransform& t, double tau) {
  if (corrs.empty()) throw Error(ErrorCode::EmptySet, "no correspondences");
  if (!(tau > 0.0)) throw Error(ErrorCode::NonPositiveThreshold, "tau must be > 0");
  std::size_t count = 0;
  for (const auto& c : corrs.pairs) {
    if ((t.apply(c.query_point) - c.candidate_point).norm() < tau) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(corrs.size());
}

namespace detail {

inline std::size_t mark_inliers(const CorrespondenceSet& corrs, const RigidTransform& t, double tau,
                                std::vector<bool>& mask) {
  mask.assign(corrs.size(), false);
  std::size_t count = 0;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if ((t.apply(corrs[i].query_point) - corrs[i].candidate_point).norm() < tau) {
      mask[i] = true;
      ++count;
    }
  }
  return count;
}

// Iterations needed to draw one all-inlier sample with the given confidence.
inline double required_iterations(double inlier_fraction, std::size_t sample_size, double confidence) {
  const double p_good = std::pow(inlier_fraction, static_cast<double>(sample_size));
  if (p_good >= 1.0) return 1.0;
  if (p_good <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(1.0 - confidence) / std::log(1.0 - p_good);
}

}  // namespace detail

/// Seeded RANSAC over minimal 3-point Kabsch hypotheses. The best hypothesis
/// (most inliers, first found on ties) is re-fitted on its inliers; the refit
/// is kept only when it does not lose inliers.
inline RegistrationResult ransac_register(const CorrespondenceSet& corrs, const RansacParams& params) {
  if (!(params.inlier_threshold > 0.0)) throw Error(ErrorCode::NonPositiveThreshold, "tau must be > 0");
  if (params.max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  if (params.min_sample < 3) throw Error(ErrorCode::InvalidArgument, "min_sample must be >= 3");
  const std::size_t n = corrs.size();
  if (n < params.min_sample) {
    throw Error(ErrorCode::TooFewCorrespondences, "need >= " + std::to_string(params.min_sample) +
                                                      " correspondences, got " + std::to_string(n));
  }

  std::mt19937_64 rng(params.seed);
  std::vector<std::size_t> pool(n);
  std::vector<PointPair> sample(params.min_sample);
  std::vector<bool> mask;

  std::optional<RigidTransform> best;
  std::size_t best_count = 0;
  double needed = static_cast<double>(params.max_iterations);

  for (std::size_t it = 0; it < params.max_iterations && static_cast<double>(it) < needed; ++it) {
    // Partial Fisher-Yates: distinct indices without replacement.
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t k = 0; k < params.min_sample; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(pool[k], pool[pick(rng)]);
      sample[k] = {corrs[pool[k]].query_point, corrs[pool[k]].candidate_point};
    }
    RigidTransform hypothesis;
    try {
      hypothesis = kabsch_fit(sample);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateConfiguration) continue;
      throw;
    }
    const std::size_t count = detail::mark_inliers(corrs, hypothesis, params.inlier_threshold, mask);
    if (!best || count > best_count) {
      best = hypothesis;
      best_count = count;
      needed = std::min(needed, detail::required_iterations(static_cast<double>(count) / static_cast<double>(n),
                                                            params.min_sample, params.confidence));
    }
  }
  if (!best) throw Error(ErrorCode::DegenerateConfiguration, "every sampled triple was degenerate");

  RegistrationResult result;
  result.transform = *best;
  detail::mark_inliers(corrs, *best, params.inlier_threshold, mask);

  if (best_count >= params.min_sample) {
    CorrespondenceSet inliers;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) inliers.pairs.push_back(corrs[i]);
    }
    try {
      const RigidTransform refit = kabsch_fit(inliers);
      std::vector<bool> refit_mask;
      if (detail::mark_inliers(corrs, refit, params.inlier_threshold, refit_mask) >= best_count) {
        result.transform = refit;
        mask = std::move(refit_mask);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateConfiguration) throw;
    }
  }

  result.inlier_mask = std::move(mask);
  const auto count = static_cast<std::size_t>(std::count(result.inlier_mask.begin(), result.inlier_mask.end(), true));
  result.inlier_ratio = static_cast<double>(count) / static_cast<double>(n);
  return result;
}

}  // namespace sgv
