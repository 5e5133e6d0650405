#include "sgv/retrieval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

namespace {

sgv::ScanRecord with_descriptor(const std::string& id, std::vector<float> g) {
  sgv::ScanRecord s;
  s.id = id;
  s.cloud = sgv::CloudMatrix::Zero(1, 3);
  s.local_features = sgv::FeatureMatrix::Zero(1, 1);
  s.global_descriptor = Eigen::Map<sgv::Descriptor>(g.data(), static_cast<Eigen::Index>(g.size()));
  return s;
}

std::vector<sgv::ScanRecord> random_db(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<float> n01;
  std::vector<sgv::ScanRecord> db;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> g(d);
    for (auto& v : g) v = n01(rng);
    db.push_back(with_descriptor("db" + std::to_string(i), g));
  }
  return db;
}

TEST(BuildIndex, KeepsDatabaseOrder) {
  const std::vector<sgv::ScanRecord> db{with_descriptor("c", {1}), with_descriptor("a", {2}), with_descriptor("b", {3})};
  const auto index = sgv::build_index(db);
  EXPECT_EQ(index.size(), 3u);
  EXPECT_EQ(index.ids, (std::vector<std::string>{"c", "a", "b"}));
  EXPECT_EQ(index.row(2)(0), 3.0);
}

TEST(BuildIndex, Errors) {
  try {
    sgv::build_index({});
    FAIL();
  } catch (const sgv::Error& e) {
    EXPECT_EQ(e.code(), sgv::ErrorCode::EmptyDatabase);
  }
  const std::vector<sgv::ScanRecord> mixed{with_descriptor("a", {1, 2}), with_descriptor("b", {1})};
  try {
    sgv::build_index(mixed);
    FAIL();
  } catch (const sgv::Error& e) {
    EXPECT_EQ(e.code(), sgv::ErrorCode::DimMismatch);
  }
}

TEST(QueryTopK, ExactMatch) {
  std::mt19937_64 rng(41);
  const auto db = random_db(5, 6, rng);
  const auto index = sgv::build_index(db);
  const auto lr = sgv::query_topk(index, db[2].global_descriptor, 1);
  ASSERT_EQ(lr.size(), 1u);
  EXPECT_EQ(lr[0].id, "db2");
  EXPECT_EQ(lr[0].score, 0.0);
}

TEST(QueryTopK, OneDimensional) {
  const std::vector<sgv::ScanRecord> db{with_descriptor("zero", {0}), with_descriptor("one", {1}),
                                        with_descriptor("five", {5})};
  const auto lr = sgv::query_topk(sgv::build_index(db), Eigen::VectorXd(Eigen::VectorXd::Constant(1, 0.9)), 2);
  ASSERT_EQ(lr.size(), 2u);
  EXPECT_EQ(lr[0].id, "one");
  EXPECT_EQ(lr[1].id, "zero");
  EXPECT_NEAR(lr[0].score, 0.1, 1e-12);
  EXPECT_NEAR(lr[1].score, 0.9, 1e-12);
}

TEST(QueryTopK, ClampsToDatabaseSize) {
  std::mt19937_64 rng(42);
  const auto index = sgv::build_index(random_db(4, 3, rng));
  EXPECT_EQ(sgv::query_topk(index, Eigen::VectorXd(Eigen::VectorXd::Zero(3)), 100).size(), 4u);
}

TEST(QueryTopK, DimMismatch) {
  std::mt19937_64 rng(43);
  const auto index = sgv::build_index(random_db(4, 3, rng));
  try {
    sgv::query_topk(index, Eigen::VectorXd(Eigen::VectorXd::Zero(4)), 1);
    FAIL();
  } catch (const sgv::Error& e) {
    EXPECT_EQ(e.code(), sgv::ErrorCode::DimMismatch);
  }
}

TEST(QueryTopK, TiesKeepDatabaseOrder) {
  const std::vector<sgv::ScanRecord> db{with_descriptor("a", {1}), with_descriptor("b", {-1}), with_descriptor("c", {1})};
  const auto lr = sgv::query_topk(sgv::build_index(db), Eigen::VectorXd(Eigen::VectorXd::Zero(1)), 3);
  EXPECT_EQ(lr.ids(), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(QueryTopK, MatchesExhaustiveSortAndIsPrefixConsistent) {
  std::mt19937_64 rng(44);
  std::normal_distribution<double> n01;
  for (auto metric : {sgv::DescriptorMetric::Euclidean, sgv::DescriptorMetric::Cosine}) {
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t n = 1 + rng() % 1000;
      const auto db = random_db(n, 8, rng);
      const auto index = sgv::build_index(db, metric);
      Eigen::VectorXd g(8);
      for (auto& v : g) v = n01(rng);

      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::vector<double> dist(n);
      for (std::size_t i = 0; i < n; ++i) dist[i] = sgv::descriptor_distance(g, index.row(i), metric);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

      const auto full = sgv::query_topk(index, g, n);
      ASSERT_EQ(full.size(), n);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_EQ(full[i].id, db[order[i]].id);
        EXPECT_EQ(full[i].score, dist[order[i]]);
      }
      EXPECT_TRUE(full.is_consistent());
      const std::size_t k = 1 + rng() % n;
      const auto shorter = sgv::query_topk(index, g, k);
      ASSERT_EQ(shorter.size(), k);
      for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(shorter[i], full[i]);
    }
  }
}

}  // namespace
