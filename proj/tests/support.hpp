#pragma once

#include "sgv/core.hpp"
#include "sgv/matching.hpp"

#include <Eigen/Eigenvalues>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace sgv::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "sgv") {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline ScanRecord scan_from(const std::string& id, const std::vector<Point3>& points,
                            const std::vector<std::vector<float>>& features, Eigen::Index descriptor_dim = 4) {
  ScanRecord s;
  s.id = id;
  const auto n = static_cast<Eigen::Index>(points.size());
  const auto fdim = features.empty() ? Eigen::Index{1} : static_cast<Eigen::Index>(features.front().size());
  s.cloud.resize(n, 3);
  s.local_features.resize(n, fdim);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.cloud.row(i) = points[static_cast<std::size_t>(i)].cast<float>().transpose();
    for (Eigen::Index c = 0; c < fdim; ++c) s.local_features(i, c) = features[static_cast<std::size_t>(i)][c];
  }
  s.global_descriptor = Descriptor::Zero(descriptor_dim);
  return s;
}

/// Scan with uniform points in a cube of side `extent` and distinct random
/// features, one per point.
inline ScanRecord random_scan(const std::string& id, Eigen::Index n, std::mt19937_64& rng, double extent = 20.0,
                              Eigen::Index fdim = 8) {
  std::uniform_real_distribution<float> pos(0.0f, static_cast<float>(extent));
  std::normal_distribution<float> n01;
  ScanRecord s;
  s.id = id;
  s.cloud.resize(n, 3);
  s.local_features.resize(n, fdim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) s.cloud(i, c) = pos(rng);
    for (Eigen::Index c = 0; c < fdim; ++c) s.local_features(i, c) = n01(rng);
  }
  s.global_descriptor = Descriptor::Zero(4);
  return s;
}

/// Copy of `scan` with every point moved by `t`; features unchanged.
inline ScanRecord transformed_copy(const ScanRecord& scan, const RigidTransform& t, const std::string& id) {
  ScanRecord out = scan;
  out.id = id;
  for (Eigen::Index i = 0; i < scan.cloud.rows(); ++i) {
    out.cloud.row(i) = t.apply(scan.point(static_cast<std::size_t>(i))).cast<float>().transpose();
  }
  return out;
}

inline RigidTransform random_transform(std::mt19937_64& rng, double max_translation = 10.0) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> angle(-3.1, 3.1);
  std::uniform_real_distribution<double> shift(-max_translation, max_translation);
  const Eigen::Vector3d axis(n01(rng), n01(rng), n01(rng));
  return RigidTransform::from_axis_angle(axis, angle(rng), Eigen::Vector3d(shift(rng), shift(rng), shift(rng)));
}

/// Correspondence set with random points on both sides.
inline CorrespondenceSet random_correspondences(std::size_t n, std::mt19937_64& rng, double extent = 3.0) {
  std::uniform_real_distribution<double> u(0.0, extent);
  CorrespondenceSet set;
  for (std::size_t i = 0; i < n; ++i) {
    Correspondence c;
    c.query_point = Point3(u(rng), u(rng), u(rng));
    c.candidate_point = Point3(u(rng), u(rng), u(rng));
    c.query_index = c.candidate_index = static_cast<std::uint32_t>(i);
    set.pairs.push_back(c);
  }
  return set;
}

/// Largest eigenpair of a symmetric matrix via a dense eigensolver.
struct DenseEigen {
  double lambda_max;
  Eigen::VectorXd v_max;
  double gap;  // lambda_max minus the next eigenvalue
};

inline DenseEigen dense_principal(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const auto n = m.rows();
  DenseEigen out{es.eigenvalues()(n - 1), es.eigenvectors().col(n - 1), 0.0};
  out.gap = n > 1 ? out.lambda_max - es.eigenvalues()(n - 2) : out.lambda_max;
  if (out.v_max.sum() < 0.0) out.v_max = -out.v_max;
  return out;
}

}  // namespace sgv::testing
