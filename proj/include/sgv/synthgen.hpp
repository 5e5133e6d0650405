#pragma once

#include "sgv/core.hpp"
#include "sgv/metrics.hpp"
#include "sgv/storage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace sgv {

/// Parameters of a synthetic world. Places sit on a square grid; each has a
/// random landmark layout. Aliased places clone a distant place's layout with
/// a few landmarks nudged, so their global descriptors are nearly identical
/// while pairwise geometry differs.
struct WorldConfig {
  std::uint64_t seed = 7;
  std::size_t num_places = 200;
  std::size_t num_queries = 50;
  double place_spacing = 10.0;       // meters between grid neighbours
  std::size_t points_per_scan = 256;  // expected landmarks inside the crop
  double crop_radius = 15.0;         // meters (horizontal)
  double alias_fraction = 0.3;
  double feature_noise_sigma = 0.05;
  double outlier_rate = 0.3;
  double pose_noise_trans = 0.5;     // meters, per horizontal axis
  double pose_noise_rot = 5.0;       // degrees, yaw
  std::size_t descriptor_dim = 16;
  std::size_t feature_dim = 16;
  double descriptor_noise_sigma = 0.01;
  double point_noise_sigma = 0.02;   // meters
  std::size_t landmark_types = 32;
  double alias_perturb_fraction = 0.1;
  double alias_perturb_min = 0.5;    // meters
  double alias_perturb_max = 1.0;    // meters
  double alias_min_separation = 50.0;  // meters between a clone and its source
  double layout_height = 4.0;        // meters
  double truth_radius = 5.0;         // meters

  void validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
    if (num_places < 1) bad("num_places must be >= 1");
    if (num_queries > num_places) bad("num_queries must not exceed num_places");
    if (!(place_spacing > 0.0)) bad("place_spacing must be > 0");
    if (points_per_scan < 1) bad("points_per_scan must be >= 1");
    if (!(crop_radius > 0.0)) bad("crop_radius must be > 0");
    if (!(alias_fraction >= 0.0 && alias_fraction <= 1.0)) bad("alias_fraction must be in [0, 1]");
    if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0)) bad("outlier_rate must be in [0, 1]");
    if (!(alias_perturb_fraction >= 0.0 && alias_perturb_fraction <= 1.0)) bad("alias_perturb_fraction must be in [0, 1]");
    if (feature_noise_sigma < 0.0 || descriptor_noise_sigma < 0.0 || point_noise_sigma < 0.0 ||
        pose_noise_trans < 0.0 || pose_noise_rot < 0.0) {
      bad("noise sigmas must be >= 0");
    }
    if (!(alias_perturb_min >= 0.0 && alias_perturb_max >= alias_perturb_min)) bad("alias perturbation range invalid");
    if (descriptor_dim < 1 || feature_dim < 1 || landmark_types < 1) bad("dims must be >= 1");
    if (!(layout_height >= 0.0) || !(truth_radius > 0.0)) bad("layout_height/truth_radius invalid");
  }
};

struct World {
  std::vector<ScanRecord> database;
  std::vector<ScanRecord> queries;
  std::map<std::string, std::set<std::string>> truth;  // query id -> db ids within truth_radius
  std::map<std::string, std::string> source_place;     // query id -> revisited db id
  std::map<std::string, std::string> alias_of;         // clone db id -> source db id
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ index);
}

struct Landmark {
  Eigen::Vector3d position;  // place-local frame
  std::uint64_t uid = 0;
  std::size_t type = 0;
};

struct Place {
  std::string id;
  RigidTransform pose;  // place -> world
  std::vector<Landmark> layout;
};

// Rounds through f32 so poses survive the 32-bit archive bit-exactly. The
// volatile store keeps GCC 11's SLP vectorizer at -O3 from folding the
// double -> float -> double round trip away.
inline RigidTransform quantize_f32(const RigidTransform& t) {
  const auto round = [](double v) {
    volatile float f = static_cast<float>(v);
    return static_cast<double>(f);
  };
  const Eigen::Matrix3d r = t.rotation().unaryExpr(round);
  const Eigen::Vector3d p = t.translation().unaryExpr(round);
  return RigidTransform(r, p, kStoredPoseTolerance);
}

inline std::string place_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "db%05zu", i);
  return buf;
}

inline std::string query_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "q%05zu", i);
  return buf;
}

class WorldBuilder {
 public:
  explicit WorldBuilder(const WorldConfig& cfg) : cfg_(cfg) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 0, 0));
    std::normal_distribution<double> n01;
    projection_.resize(static_cast<Eigen::Index>(cfg.descriptor_dim), static_cast<Eigen::Index>(cfg.landmark_types));
    for (Eigen::Index r = 0; r < projection_.rows(); ++r)
      for (Eigen::Index c = 0; c < projection_.cols(); ++c) projection_(r, c) = n01(rng);
  }

  // Identity embedding of a landmark: a seeded random unit vector.
  Eigen::VectorXd embedding(std::uint64_t uid) const {
    std::mt19937_64 rng(derive_seed(cfg_.seed, 1, uid));
    return random_unit(rng);
  }

  Eigen::VectorXd random_unit(std::mt19937_64& rng) const {
    std::normal_distribution<double> n01;
    Eigen::VectorXd v(static_cast<Eigen::Index>(cfg_.feature_dim));
    do {
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = n01(rng);
    } while (v.norm() == 0.0);
    return v.normalized();
  }

  double layout_radius() const { return cfg_.crop_radius + 3.0 * cfg_.pose_noise_trans + 1.0; }

  std::vector<Landmark> random_layout(std::mt19937_64& rng, std::uint64_t& next_uid) const {
    const double r_layout = layout_radius();
    const double density_scale = (r_layout * r_layout) / (cfg_.crop_radius * cfg_.crop_radius);
    const auto count = static_cast<std::size_t>(std::llround(static_cast<double>(cfg_.points_per_scan) * density_scale));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> type(0, cfg_.landmark_types - 1);
    std::vector<Landmark> out(count);
    for (auto& l : out) {
      const double rad = r_layout * std::sqrt(u01(rng));
      const double ang = 2.0 * std::numbers::pi * u01(rng);
      l.position = {rad * std::cos(ang), rad * std::sin(ang), cfg_.layout_height * u01(rng)};
      l.uid = next_uid++;
      l.type = type(rng);
    }
    return out;
  }

  // Observation of `layout` from `sensor` (sensor -> place-local frame).
  ScanRecord observe(const std::string& id, const std::vector<Landmark>& layout, const RigidTransform& sensor,
                     const RigidTransform& place_pose, std::uint64_t noise_seed, double outlier_rate) const {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const RigidTransform to_sensor = sensor.inverse();

    std::vector<const Landmark*> visible;
    for (const auto& l : layout) {
      if ((l.position - sensor.translation()).head<2>().norm() <= cfg_.crop_radius) visible.push_back(&l);
    }
    if (visible.empty()) visible.push_back(&layout.front());

    ScanRecord s;
    s.id = id;
    const auto n = static_cast<Eigen::Index>(visible.size());
    s.cloud.resize(n, 3);
    s.local_features.resize(n, static_cast<Eigen::Index>(cfg_.feature_dim));
    Eigen::VectorXd histogram = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg_.landmark_types));
    for (Eigen::Index i = 0; i < n; ++i) {
      const Landmark& l = *visible[static_cast<std::size_t>(i)];
      Eigen::Vector3d p = to_sensor.apply(l.position);
      for (int c = 0; c < 3; ++c) p(c) += cfg_.point_noise_sigma * n01(rng);
      s.cloud.row(i) = p.cast<float>().transpose();

      Eigen::VectorXd f = embedding(l.uid);
      for (Eigen::Index c = 0; c < f.size(); ++c) f(c) += cfg_.feature_noise_sigma * n01(rng);
      if (outlier_rate > 0.0 && u01(rng) < outlier_rate) f = random_unit(rng);
      s.local_features.row(i) = f.cast<float>().transpose();

      histogram(static_cast<Eigen::Index>(l.type)) += 1.0;
    }
    histogram /= static_cast<double>(n);
    Eigen::VectorXd g = projection_ * histogram;
    for (Eigen::Index c = 0; c < g.size(); ++c) g(c) += cfg_.descriptor_noise_sigma * n01(rng);
    if (g.norm() > 0.0) g.normalize();
    s.global_descriptor = g.cast<float>();

    s.gt_pose = quantize_f32(place_pose.compose(sensor));
    s.geo_location = s.gt_pose.translation();
    return s;
  }

 private:
  const WorldConfig& cfg_;
  Eigen::MatrixXd projection_;
};

}  // namespace detail

/// Deterministic synthetic database/query world for a given config.
inline World generate_world(const WorldConfig& cfg) {
  cfg.validate();
  using detail::derive_seed;
  detail::WorldBuilder builder(cfg);

  const std::size_t places = cfg.num_places;
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(places))));

  std::mt19937_64 world_rng(derive_seed(cfg.seed, 2, 0));
  std::uniform_real_distribution<double> yaw(0.0, 360.0);
  std::vector<detail::Place> place(places);
  for (std::size_t i = 0; i < places; ++i) {
    place[i].id = detail::place_id(i);
    const Eigen::Vector3d pos(static_cast<double>(i % cols) * cfg.place_spacing,
                              static_cast<double>(i / cols) * cfg.place_spacing, 0.0);
    place[i].pose = RigidTransform::rot_z(yaw(world_rng), pos);
  }

  // Clones: a random subset of places copies a distinct, distant original.
  std::vector<std::size_t> order(places);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), world_rng);
  const auto wanted = std::min(places / 2, static_cast<std::size_t>(std::llround(cfg.alias_fraction * static_cast<double>(places))));
  std::vector<bool> is_clone(places, false);
  for (std::size_t k = 0; k < wanted; ++k) is_clone[order[k]] = true;
  std::vector<std::optional<std::size_t>> source(places);
  std::vector<bool> used(places, false);
  for (std::size_t k = 0; k < wanted; ++k) {
    const std::size_t c = order[k];
    std::vector<std::size_t> eligible;
    for (std::size_t j = 0; j < places; ++j) {
      if (is_clone[j] || used[j]) continue;
      if (geo_distance(place[c].pose.translation(), place[j].pose.translation()) <= cfg.alias_min_separation) continue;
      eligible.push_back(j);
    }
    if (eligible.empty()) {
      is_clone[c] = false;
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    source[c] = eligible[pick(world_rng)];
    used[*source[c]] = true;
  }

  std::uint64_t next_uid = 0;
  for (std::size_t i = 0; i < places; ++i) {
    if (is_clone[i]) continue;
    std::mt19937_64 rng(derive_seed(cfg.seed, 3, i));
    place[i].layout = builder.random_layout(rng, next_uid);
  }
  for (std::size_t i = 0; i < places; ++i) {
    if (!is_clone[i]) continue;
    std::mt19937_64 rng(derive_seed(cfg.seed, 4, i));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n01;
    place[i].layout = place[*source[i]].layout;
    for (auto& l : place[i].layout) {
      if (u01(rng) >= cfg.alias_perturb_fraction) continue;
      Eigen::Vector3d dir(n01(rng), n01(rng), n01(rng));
      if (dir.norm() == 0.0) dir = Eigen::Vector3d::UnitX();
      const double mag = cfg.alias_perturb_min + (cfg.alias_perturb_max - cfg.alias_perturb_min) * u01(rng);
      l.position += mag * dir.normalized();
    }
  }

  World world;
  world.database.reserve(places);
  for (std::size_t i = 0; i < places; ++i) {
    world.database.push_back(builder.observe(place[i].id, place[i].layout, RigidTransform::identity(), place[i].pose,
                                             derive_seed(cfg.seed, 5, i), 0.0));
    if (source[i]) world.alias_of[place[i].id] = place[*source[i]].id;
  }

  std::vector<std::size_t> revisit(places);
  std::iota(revisit.begin(), revisit.end(), 0);
  std::shuffle(revisit.begin(), revisit.end(), world_rng);
  for (std::size_t q = 0; q < cfg.num_queries; ++q) {
    const std::size_t p = revisit[q];
    std::mt19937_64 rng(derive_seed(cfg.seed, 6, q));
    std::normal_distribution<double> n01;
    const Eigen::Vector3d offset(cfg.pose_noise_trans * n01(rng), cfg.pose_noise_trans * n01(rng), 0.0);
    const RigidTransform sensor = RigidTransform::rot_z(cfg.pose_noise_rot * n01(rng), offset);
    ScanRecord s = builder.observe(detail::query_id(q), place[p].layout, sensor, place[p].pose,
                                   derive_seed(cfg.seed, 7, q), cfg.outlier_rate);
    world.truth[s.id] = ground_truth_positives(s, world.database, cfg.truth_radius);
    world.source_place[s.id] = place[p].id;
    world.queries.push_back(std::move(s));
  }
  return world;
}

/// Writes every scan as an archive under out_dir/scans plus out_dir/manifest.txt.
inline std::filesystem::path export_world(const World& world, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  try {
    fs::create_directories(out_dir / "scans");
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::IoError, e.what());
  }
  DatasetManifest manifest;
  auto emit = [&](const ScanRecord& s, ScanRole role) {
    const std::string rel = "scans/" + s.id + ".sgv";
    write_scan(out_dir / rel, s);
    manifest.entries.push_back({role, s.id, rel});
  };
  for (const auto& s : world.database) emit(s, ScanRole::Database);
  for (const auto& s : world.queries) emit(s, ScanRole::Query);

  const fs::path manifest_path = out_dir / "manifest.txt";
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + manifest_path.string() + "'");
  out << manifest.to_text();
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + manifest_path.string() + "'");
  return manifest_path;
}

}  // namespace sgv
