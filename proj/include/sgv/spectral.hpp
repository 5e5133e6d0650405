#pragma once

#include "sgv/core.hpp"
#include "sgv/matching.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>

namespace sgv {

/// Pairwise spatial-compatibility matrix of a correspondence set.
/// Dense, symmetric, entries in [0, 1], zero diagonal.
struct CompatibilityMatrix {
  Eigen::MatrixXd values;
  double d_thr = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
};

struct SpectralParams {
  double d_thr = 0.5;         // meters
  std::size_t n_max = 1000;   // sampled query points per query
  double tol = 1e-6;          // on successive unit iterates
  std::size_t max_iters = 100;
  bool mutual = false;
};

struct SpectralResult {
  Eigen::VectorXd v_star;
  double lambda = 0.0;
  double s_star = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// m_ij = max(0, 1 - d_ij^2 / d_thr^2) with d_ij = | |x_i - x_j| - |y_i - y_j| |.
inline CompatibilityMatrix build_compatibility_matrix(const CorrespondenceSet& corrs, double d_thr) {
  if (!(d_thr > 0.0)) throw Error(ErrorCode::NonPositiveThreshold, "d_thr must be > 0");
  const std::size_t n = corrs.size();
  CompatibilityMatrix m;
  m.d_thr = d_thr;
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const double inv_thr2 = 1.0 / (d_thr * d_thr);
  for (std::size_t i = 0; i < n; ++i) {
    const Point3& xi = corrs[i].query_point;
    const Point3& yi = corrs[i].candidate_point;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = (xi - corrs[j].query_point).norm();
      const double dy = (yi - corrs[j].candidate_point).norm();
      const double d = dx - dy;
      const double v = std::max(0.0, 1.0 - d * d * inv_thr2);
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      m.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return m;
}

/// Power iteration for the principal eigenvector of M, started from the
/// uniform unit vector. Iterates on M + I: same eigenvectors, but the Perron
/// root is then strictly dominant in magnitude even when the compatibility
/// graph is bipartite (where M alone has eigenvalues +l and -l and the plain
/// iteration oscillates). The reported lambda is the Rayleigh quotient of M.
inline SpectralResult power_iterate(const CompatibilityMatrix& m, double tol, std::size_t max_iters) {
  const Eigen::Index n = m.values.rows();
  if (n == 0) throw Error(ErrorCode::EmptyMatrix, "compatibility matrix is empty");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be > 0");
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");

  SpectralResult r;
  r.v_star = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));

  if ((m.values.array() == 0.0).all()) {
    r.iterations = 1;
    r.converged = true;
    return r;
  }

  constexpr double kShift = 1.0;
  Eigen::VectorXd next(n);
  for (std::size_t it = 1; it <= max_iters; ++it) {
    next.noalias() = m.values * r.v_star;
    next += kShift * r.v_star;
    next /= next.norm();
    const double step = (next - r.v_star).norm();
    r.v_star.swap(next);
    r.iterations = it;
    if (step < tol) {
      r.converged = true;
      break;
    }
  }

  r.lambda = std::max(0.0, r.v_star.dot(m.values * r.v_star));
  r.s_star = r.lambda;
  return r;
}

/// s* = v*^T M v*, the relaxed maximum inter-cluster compatibility.
inline SpectralResult spectral_fitness(const CompatibilityMatrix& m, const SpectralParams& params = {}) {
  return power_iterate(m, params.tol, params.max_iters);
}

struct CandidateScore {
  double s_star = 0.0;
  std::size_t n = 0;
};

/// Scores one candidate against a fixed query sample. Sharing the sample
/// across all candidates of a query keeps n identical, so raw s* values are
/// directly comparable.
inline CandidateScore score_candidate(const ScanRecord& query, std::span<const std::uint32_t> sample,
                                      const ScanRecord& candidate, const SpectralParams& params = {}) {
  const CorrespondenceSet corrs = match_features(query, candidate, sample, params.mutual);
  if (corrs.empty()) return {0.0, 0};
  const CompatibilityMatrix m = build_compatibility_matrix(corrs, params.d_thr);
  return {spectral_fitness(m, params).s_star, corrs.size()};
}

inline CandidateScore score_candidate(const ScanRecord& query, const ScanRecord& candidate,
                                      const SpectralParams& params = {}) {
  const auto sample = sample_query_points(query, params.n_max);
  return score_candidate(query, sample, candidate, params);
}

}  // namespace sgv
