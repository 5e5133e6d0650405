#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace sgv {

using Point3 = Eigen::Vector3d;

enum class ErrorCode {
  InvalidArgument,
  NonFinite,
  NotOrthonormal,
  MagicMismatch,
  DimMismatch,
  TruncatedFile,
  DuplicateId,
  MissingFile,
  InconsistentDims,
  IoError,
  EmptyScan,
  NonPositiveThreshold,
  EmptyMatrix,
  DegenerateConfiguration,
  TooFewCorrespondences,
  EmptySet,
  EmptyDatabase,
  UnresolvedCandidate,
  ZeroVector,
  NoEvaluableQueries,
  InvalidConfig,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotOrthonormal: return "NotOrthonormal";
    case ErrorCode::MagicMismatch: return "MagicMismatch";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::InconsistentDims: return "InconsistentDims";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyScan: return "EmptyScan";
    case ErrorCode::NonPositiveThreshold: return "NonPositiveThreshold";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::TooFewCorrespondences: return "TooFewCorrespondences";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::EmptyDatabase: return "EmptyDatabase";
    case ErrorCode::UnresolvedCandidate: return "UnresolvedCandidate";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NoEvaluableQueries: return "NoEvaluableQueries";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

// All library failures surface as sgv::Error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline bool is_finite(const Point3& p) { return p.allFinite(); }

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Rigid body motion in SE(3), stored as rotation matrix plus translation.
///
/// The rotation is validated on construction: orthonormal with determinant +1
/// within a Frobenius tolerance. The default tolerance suits transforms built in
/// double precision; transforms decoded from 32-bit storage pass a looser one.
class RigidTransform {
 public:
  static constexpr double kDefaultTolerance = 1e-9;

  RigidTransform() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation,
                 double tolerance = kDefaultTolerance)
      : rotation_(rotation), translation_(translation) {
    if (!rotation_.allFinite() || !translation_.allFinite()) {
      throw Error(ErrorCode::NonFinite, "rigid transform has non-finite entries");
    }
    const double ortho = (rotation_.transpose() * rotation_ - Eigen::Matrix3d::Identity()).norm();
    const double det = rotation_.determinant();
    if (ortho > tolerance || std::abs(det - 1.0) > tolerance) {
      throw Error(ErrorCode::NotOrthonormal,
                  "rotation deviates from SO(3) (orthonormality " + std::to_string(ortho) +
                      ", det " + std::to_string(det) + ")");
    }
  }

  static RigidTransform identity() { return {}; }

  static RigidTransform translation_only(const Eigen::Vector3d& t) {
    return {Eigen::Matrix3d::Identity(), t};
  }

  static RigidTransform rot_z(double degrees, const Eigen::Vector3d& t = Eigen::Vector3d::Zero()) {
    return {Eigen::AngleAxisd(deg2rad(degrees), Eigen::Vector3d::UnitZ()).toRotationMatrix(), t};
  }

  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double radians,
                                        const Eigen::Vector3d& t = Eigen::Vector3d::Zero()) {
    return {Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix(), t};
  }

  const Eigen::Matrix3d& rotation() const noexcept { return rotation_; }
  const Eigen::Vector3d& translation() const noexcept { return translation_; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }

  // (*this) after `other`: applies `other` first.
  RigidTransform compose(const RigidTransform& other) const {
    RigidTransform out;
    out.rotation_ = rotation_ * other.rotation_;
    out.translation_ = rotation_ * other.translation_ + translation_;
    return out;
  }

  RigidTransform inverse() const {
    RigidTransform out;
    out.rotation_ = rotation_.transpose();
    out.translation_ = -(out.rotation_ * translation_);
    return out;
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  bool is_approx(const RigidTransform& other, double tol) const {
    return (rotation_ - other.rotation_).norm() <= tol &&
           (translation_ - other.translation_).norm() <= tol;
  }

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

inline Point3 se3_apply(const RigidTransform& t, const Point3& p) { return t.apply(p); }

inline RigidTransform se3_compose(const RigidTransform& a, const RigidTransform& b) {
  return a.compose(b);
}

inline RigidTransform se3_inverse(const RigidTransform& t) { return t.inverse(); }

inline double geo_distance(const Point3& a, const Point3& b) { return (a - b).norm(); }

using CloudMatrix = Eigen::Matrix<float, Eigen::Dynamic, 3, Eigen::RowMajor>;
using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Descriptor = Eigen::VectorXf;

/// One place observation. Numeric payloads are single precision, which is
/// also the on-disk precision, so archives round-trip exactly.
struct ScanRecord {
  std::string id;
  CloudMatrix cloud;
  FeatureMatrix local_features;
  Descriptor global_descriptor;
  RigidTransform gt_pose;  // scan -> world
  Point3 geo_location = Point3::Zero();

  std::size_t size() const { return static_cast<std::size_t>(cloud.rows()); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(local_features.cols()); }
  std::size_t descriptor_dim() const { return static_cast<std::size_t>(global_descriptor.size()); }

  Point3 point(std::size_t i) const { return cloud.row(static_cast<Eigen::Index>(i)).cast<double>().transpose(); }

  void validate() const {
    if (id.empty()) throw Error(ErrorCode::InvalidArgument, "scan id is empty");
    if (cloud.rows() < 1) throw Error(ErrorCode::EmptyScan, "scan '" + id + "' has no points");
    if (local_features.rows() != cloud.rows()) {
      throw Error(ErrorCode::DimMismatch, "scan '" + id + "': feature rows != point count");
    }
    if (!cloud.allFinite() || !local_features.allFinite() || !global_descriptor.allFinite() ||
        !geo_location.allFinite()) {
      throw Error(ErrorCode::NonFinite, "scan '" + id + "' has non-finite values");
    }
  }

  friend bool operator==(const ScanRecord& a, const ScanRecord& b) {
    return a.id == b.id && a.cloud.rows() == b.cloud.rows() && a.cloud == b.cloud &&
           a.local_features.rows() == b.local_features.rows() &&
           a.local_features.cols() == b.local_features.cols() && a.local_features == b.local_features &&
           a.global_descriptor.size() == b.global_descriptor.size() &&
           a.global_descriptor == b.global_descriptor && a.gt_pose.rotation() == b.gt_pose.rotation() &&
           a.gt_pose.translation() == b.gt_pose.translation() && a.geo_location == b.geo_location;
  }
};

enum class Ordering { AscendingDistance, DescendingFitness };

struct RankedEntry {
  std::string id;
  double score = 0.0;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

/// Ordered candidate list. For DescendingFitness lists only the first
/// `reranked` entries carry fitness scores; the tail keeps its retrieval order
/// and distances.
struct RankedList {
  std::vector<RankedEntry> entries;
  Ordering ordering = Ordering::AscendingDistance;
  std::size_t reranked = 0;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  const RankedEntry& operator[](std::size_t i) const { return entries[i]; }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.id);
    return out;
  }

  bool is_consistent() const {
    std::unordered_set<std::string> seen;
    for (const auto& e : entries) {
      if (!seen.insert(e.id).second) return false;
    }
    if (ordering == Ordering::AscendingDistance) {
      for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].score < entries[i - 1].score) return false;
      }
    } else {
      for (std::size_t i = 1; i < std::min(reranked, entries.size()); ++i) {
        if (entries[i].score > entries[i - 1].score) return false;
      }
    }
    return true;
  }
};

}  // namespace sgv
