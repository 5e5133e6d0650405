#include "sgv/spectral.hpp"
#include "sgv/synthgen.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

namespace {

using sgv::testing::dense_principal;
using sgv::testing::random_correspondences;

sgv::CorrespondenceSet pairs_of(const std::vector<std::pair<sgv::Point3, sgv::Point3>>& xy) {
  sgv::CorrespondenceSet set;
  for (const auto& [x, y] : xy) {
    sgv::Correspondence c;
    c.query_point = x;
    c.candidate_point = y;
    set.pairs.push_back(c);
  }
  return set;
}

sgv::CompatibilityMatrix matrix_of(const Eigen::MatrixXd& values) {
  sgv::CompatibilityMatrix m;
  m.values = values;
  m.d_thr = 0.5;
  return m;
}

TEST(CompatibilityMatrix, ZeroLengthDifferenceGivesOne) {
  const auto m = sgv::build_compatibility_matrix(pairs_of({{{0, 0, 0}, {0, 0, 0}}, {{1, 0, 0}, {1, 0, 0}}}), 0.5);
  Eigen::Matrix2d expected;
  expected << 0, 1, 1, 0;
  EXPECT_EQ(m.values, Eigen::MatrixXd(expected));
}

TEST(CompatibilityMatrix, PartialCompatibility) {
  // d = 0.4 -> 1 - 0.16 / 0.25 = 0.36
  const auto m = sgv::build_compatibility_matrix(pairs_of({{{0, 0, 0}, {0, 0, 0}}, {{1, 0, 0}, {1.4, 0, 0}}}), 0.5);
  EXPECT_NEAR(m.values(0, 1), 0.36, 1e-12);
  EXPECT_EQ(m.values(0, 1), m.values(1, 0));
  EXPECT_EQ(m.values(0, 0), 0.0);
}

TEST(CompatibilityMatrix, ClampedBeyondThreshold) {
  const auto m = sgv::build_compatibility_matrix(pairs_of({{{0, 0, 0}, {0, 0, 0}}, {{1, 0, 0}, {2, 0, 0}}}), 0.5);
  EXPECT_TRUE((m.values.array() == 0.0).all());
}

TEST(CompatibilityMatrix, NonPositiveThreshold) {
  const auto set = pairs_of({{{0, 0, 0}, {0, 0, 0}}});
  for (double bad : {0.0, -1.0}) {
    try {
      sgv::build_compatibility_matrix(set, bad);
      FAIL();
    } catch (const sgv::Error& e) {
      EXPECT_EQ(e.code(), sgv::ErrorCode::NonPositiveThreshold);
    }
  }
}

TEST(CompatibilityMatrix, SymmetricBoundedZeroDiagonal) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = sgv::build_compatibility_matrix(random_correspondences(1 + rng() % 60, rng), 0.5);
    EXPECT_EQ(m.values, m.values.transpose());
    EXPECT_TRUE((m.values.array() >= 0.0).all());
    EXPECT_TRUE((m.values.array() <= 1.0).all());
    EXPECT_TRUE((m.values.diagonal().array() == 0.0).all());
  }
}

TEST(CompatibilityMatrix, DoublingThresholdIsEntrywiseMonotone) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const auto set = random_correspondences(2 + rng() % 60, rng);
    const auto m1 = sgv::build_compatibility_matrix(set, 0.5);
    const auto m2 = sgv::build_compatibility_matrix(set, 1.0);
    EXPECT_TRUE((m2.values.array() >= m1.values.array()).all());
    EXPECT_GE(dense_principal(m2.values).lambda_max, dense_principal(m1.values).lambda_max - 1e-12);
  }
}

TEST(PowerIterate, CompleteGraph) {
  const auto r = sgv::power_iterate(matrix_of(Eigen::MatrixXd::Ones(4, 4) - Eigen::MatrixXd::Identity(4, 4)), 1e-6, 100);
  EXPECT_NEAR(r.lambda, 3.0, 1e-12);
  EXPECT_LT((r.v_star - Eigen::Vector4d::Constant(0.5)).norm(), 1e-12);
  EXPECT_TRUE(r.converged);
}

TEST(PowerIterate, TwoByTwoAgainstDenseOracle) {
  Eigen::Matrix2d m;
  m << 0, 0.36, 0.36, 0;
  const auto oracle = dense_principal(m);
  const auto r = sgv::power_iterate(matrix_of(m), 1e-6, 100);
  EXPECT_NEAR(r.lambda, oracle.lambda_max, 1e-12);
  EXPECT_NEAR(r.lambda, 0.36, 1e-12);
  EXPECT_LT((r.v_star - oracle.v_max).norm(), 1e-9);
  EXPECT_NEAR(r.v_star(0), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(PowerIterate, ZeroMatrixIsUniform) {
  const auto r = sgv::power_iterate(matrix_of(Eigen::MatrixXd::Zero(3, 3)), 1e-6, 100);
  EXPECT_EQ(r.lambda, 0.0);
  EXPECT_EQ(r.s_star, 0.0);
  EXPECT_LT((r.v_star - Eigen::Vector3d::Constant(1.0 / std::sqrt(3.0))).norm(), 1e-15);
}

TEST(PowerIterate, EmptyMatrix) {
  try {
    sgv::power_iterate(matrix_of(Eigen::MatrixXd(0, 0)), 1e-6, 100);
    FAIL();
  } catch (const sgv::Error& e) {
    EXPECT_EQ(e.code(), sgv::ErrorCode::EmptyMatrix);
  }
}

TEST(PowerIterate, BipartiteGraphDoesNotOscillate) {
  // Path graph 0-1-2: eigenvalues +sqrt(2), 0, -sqrt(2).
  Eigen::Matrix3d m;
  m << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const auto r = sgv::power_iterate(matrix_of(m), 1e-9, 1000);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.lambda, std::sqrt(2.0), 1e-12);
}

TEST(PowerIterate, NonConvergenceIsReportedNotThrown) {
  std::mt19937_64 rng(23);
  const auto m = sgv::build_compatibility_matrix(random_correspondences(80, rng), 0.5);
  const auto r = sgv::power_iterate(m, 1e-15, 1);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1u);
  EXPECT_NEAR(r.s_star, r.v_star.dot(m.values * r.v_star), 1e-12);
}

TEST(PowerIterate, MatchesDenseOracleOnRandomSets) {
  std::mt19937_64 rng(24);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = sgv::build_compatibility_matrix(random_correspondences(2 + rng() % 99, rng), 0.5);
    const auto oracle = dense_principal(m.values);
    const auto r = sgv::power_iterate(m, 1e-10, 100000);
    // Rayleigh bound holds regardless of the spectral gap.
    EXPECT_LE(r.s_star, oracle.lambda_max + 1e-6);
    if (oracle.lambda_max <= 0.0 || oracle.gap < 1e-6 * oracle.lambda_max) continue;
    ++compared;
    EXPECT_NEAR(r.lambda, oracle.lambda_max, 1e-6 * oracle.lambda_max);
    EXPECT_EQ(r.lambda, r.s_star);
  }
  EXPECT_GT(compared, 150);
}

TEST(SpectralFitness, PerfectSetScoresNMinusOne) {
  const auto set = pairs_of({{{0, 0, 0}, {5, 5, 5}}, {{1, 0, 0}, {6, 5, 5}}, {{0, 1, 0}, {5, 6, 5}}, {{0, 0, 1}, {5, 5, 6}}});
  EXPECT_NEAR(sgv::spectral_fitness(sgv::build_compatibility_matrix(set, 0.5)).s_star, 3.0, 1e-9);
}

TEST(SpectralFitness, SingleCorrespondenceScoresZero) {
  const auto m = sgv::build_compatibility_matrix(pairs_of({{{0, 0, 0}, {1, 1, 1}}}), 0.5);
  EXPECT_EQ(m.values, Eigen::MatrixXd::Zero(1, 1));
  EXPECT_EQ(sgv::spectral_fitness(m).s_star, 0.0);
}

// Geometry shared by the inlier-count tests: query points on a tetrahedron-ish
// layout, inliers mapped by a fixed rigid motion, outliers far off.
struct Layout {
  std::vector<sgv::Point3> x{{0, 0, 0}, {3, 0, 0}, {0, 4, 0}, {0, 0, 5}, {2, 2, 2}, {4, 1, 3}};
  std::vector<sgv::Point3> outliers{{40, -7, 3}, {-20, 13, 9}, {7, 33, -18}, {-9, -27, 30}, {25, 25, -25}, {-31, 2, 17}};
  sgv::RigidTransform t = sgv::RigidTransform::rot_z(35.0, {10, -4, 1});

  sgv::CorrespondenceSet build(std::size_t n, unsigned inlier_mask) const {
    sgv::CorrespondenceSet set;
    for (std::size_t i = 0; i < n; ++i) {
      sgv::Correspondence c;
      c.query_point = x[i];
      c.candidate_point = (inlier_mask >> i) & 1u ? t.apply(x[i]) : outliers[i];
      set.pairs.push_back(c);
    }
    return set;
  }
};

double oracle_s_star(const sgv::CorrespondenceSet& set) {
  return dense_principal(sgv::build_compatibility_matrix(set, 0.5).values).lambda_max;
}

TEST(SpectralFitness, ThreeInliersBeatTwo) {
  const Layout layout;
  const auto three = layout.build(4, 0b0111);
  const auto two = layout.build(4, 0b0011);
  const double s3 = sgv::spectral_fitness(sgv::build_compatibility_matrix(three, 0.5)).s_star;
  const double s2 = sgv::spectral_fitness(sgv::build_compatibility_matrix(two, 0.5)).s_star;
  EXPECT_NEAR(s3, oracle_s_star(three), 1e-9);
  EXPECT_NEAR(s2, oracle_s_star(two), 1e-9);
  EXPECT_GT(s3, s2);
}

TEST(SpectralFitness, ReplacingOutlierWithInlierNeverDecreases) {
  const Layout layout;
  for (std::size_t n = 4; n <= 6; ++n) {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      const auto before = layout.build(n, mask);
      const double s_before = sgv::spectral_fitness(sgv::build_compatibility_matrix(before, 0.5)).s_star;
      EXPECT_NEAR(s_before, oracle_s_star(before), 1e-6);
      for (std::size_t k = 0; k < n; ++k) {
        if ((mask >> k) & 1u) continue;
        const auto after = layout.build(n, mask | (1u << k));
        const double s_after = sgv::spectral_fitness(sgv::build_compatibility_matrix(after, 0.5)).s_star;
        EXPECT_GE(s_after, s_before - 1e-9) << "n=" << n << " mask=" << mask << " k=" << k;
      }
    }
  }
}

TEST(ScoreCandidate, SelfMatchScoresNMinusOne) {
  std::mt19937_64 rng(25);
  const auto q = sgv::testing::random_scan("q", 120, rng);
  const auto s = sgv::score_candidate(q, q);
  EXPECT_EQ(s.n, 120u);
  EXPECT_NEAR(s.s_star, 119.0, 1e-6);
}

TEST(ScoreCandidate, RigidMotionDoesNotChangeScore) {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = sgv::testing::random_scan("q", 60 + static_cast<Eigen::Index>(rng() % 100), rng);
    const auto moved = sgv::testing::transformed_copy(q, sgv::testing::random_transform(rng, 50.0), "c");
    const auto a = sgv::score_candidate(q, q);
    const auto b = sgv::score_candidate(q, moved);
    ASSERT_EQ(a.n, b.n);
    EXPECT_NEAR(a.s_star, b.s_star, 1e-5 * static_cast<double>(a.n - 1));
  }
}

TEST(ScoreCandidate, PermutedFeaturesScoreLow) {
  // Over seeds 1..30 the largest observed s* / (n - 1) was 0.0353.
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    sgv::WorldConfig wc;
    wc.seed = seed;
    wc.num_places = 4;
    wc.num_queries = 1;
    wc.alias_fraction = 0.0;
    wc.outlier_rate = 0.0;
    const auto world = sgv::generate_world(wc);
    const auto& q = world.queries.front();
    auto c = q;
    std::vector<Eigen::Index> perm(q.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < q.size(); ++i) {
      c.local_features.row(static_cast<Eigen::Index>(i)) = q.local_features.row(perm[i]);
    }
    const auto s = sgv::score_candidate(q, c);
    ASSERT_GT(s.n, 1u);
    EXPECT_LT(s.s_star, 0.2 * static_cast<double>(s.n - 1)) << "seed " << seed;
  }
}

TEST(ScoreCandidate, SharedSampleKeepsNEqualAcrossCandidates) {
  std::mt19937_64 rng(27);
  const auto q = sgv::testing::random_scan("q", 300, rng);
  sgv::SpectralParams p;
  p.n_max = 100;
  const auto sample = sgv::sample_query_points(q, p.n_max);
  for (int i = 0; i < 5; ++i) {
    const auto c = sgv::testing::random_scan("c", 50 + static_cast<Eigen::Index>(rng() % 200), rng);
    EXPECT_EQ(sgv::score_candidate(q, sample, c, p).n, 100u);
  }
}

}  // namespace
