#pragma once

#include "sgv/core.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

namespace sgv {

static_assert(std::endian::native == std::endian::little, "archive codec assumes a little-endian host");

namespace detail {

inline constexpr char kScanMagic[4] = {'S', 'G', 'V', '1'};

class ByteWriter {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void bytes(std::string_view s) { raw(s.data(), s.size()); }
  std::vector<char> take() { return std::move(buf_); }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  std::vector<char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const char> data) : data_(data) {}

  std::uint32_t u32(const char* what) {
    std::uint32_t v;
    raw(&v, sizeof v, what);
    return v;
  }
  float f32(const char* what) {
    float v;
    raw(&v, sizeof v, what);
    return v;
  }
  std::string bytes(std::size_t n, const char* what) {
    std::string s(n, '\0');
    raw(s.data(), n, what);
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void raw(void* out, std::size_t n, const char* what) {
    if (remaining() < n) {
      throw Error(ErrorCode::TruncatedFile, std::string("archive ends inside ") + what);
    }
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  std::span<const char> data_;
  std::size_t pos_ = 0;
};

inline std::vector<char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

// Rotations stored as f32 carry ~1e-7 rounding, so decoded poses are
// validated at single-precision tolerance.
inline constexpr double kStoredPoseTolerance = 1e-5;

}  // namespace detail

// ScanArchive layout (little-endian):
//   "SGV1" | N u32 | d' u32 | d u32 | id_len u32 | id bytes |
//   points N*3 f32 | features N*d' f32 | descriptor d f32 |
//   pose 16 f32 (row-major 4x4) | geo_location 3 f32
inline std::vector<char> encode_scan(const ScanRecord& record) {
  record.validate();
  detail::ByteWriter w;
  w.bytes(std::string_view(detail::kScanMagic, 4));
  w.u32(static_cast<std::uint32_t>(record.size()));
  w.u32(static_cast<std::uint32_t>(record.feature_dim()));
  w.u32(static_cast<std::uint32_t>(record.descriptor_dim()));
  w.u32(static_cast<std::uint32_t>(record.id.size()));
  w.bytes(record.id);
  for (Eigen::Index i = 0; i < record.cloud.rows(); ++i)
    for (Eigen::Index c = 0; c < 3; ++c) w.f32(record.cloud(i, c));
  for (Eigen::Index i = 0; i < record.local_features.rows(); ++i)
    for (Eigen::Index c = 0; c < record.local_features.cols(); ++c) w.f32(record.local_features(i, c));
  for (Eigen::Index c = 0; c < record.global_descriptor.size(); ++c) w.f32(record.global_descriptor(c));
  const Eigen::Matrix4d pose = record.gt_pose.matrix();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) w.f32(static_cast<float>(pose(r, c)));
  for (int c = 0; c < 3; ++c) w.f32(static_cast<float>(record.geo_location(c)));
  return w.take();
}

inline ScanRecord decode_scan(std::span<const char> bytes) {
  detail::ByteReader r(bytes);
  if (r.remaining() < 4 || std::memcmp(bytes.data(), detail::kScanMagic, 4) != 0) {
    throw Error(ErrorCode::MagicMismatch, "not an SGV1 scan archive");
  }
  r.bytes(4, "magic");
  const std::uint32_t n = r.u32("header");
  const std::uint32_t fdim = r.u32("header");
  const std::uint32_t ddim = r.u32("header");
  const std::uint32_t id_len = r.u32("header");

  const std::uint64_t payload = static_cast<std::uint64_t>(id_len) +
                                4ull * (3ull * n + static_cast<std::uint64_t>(n) * fdim + ddim + 16 + 3);
  if (r.remaining() < payload) {
    throw Error(ErrorCode::TruncatedFile, "header declares " + std::to_string(payload) +
                                              " payload bytes, found " + std::to_string(r.remaining()));
  }
  if (r.remaining() > payload) {
    throw Error(ErrorCode::DimMismatch, "archive has " + std::to_string(r.remaining() - payload) +
                                            " trailing bytes beyond the declared dimensions");
  }

  ScanRecord s;
  s.id = r.bytes(id_len, "id");
  s.cloud.resize(n, 3);
  for (std::uint32_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) s.cloud(i, c) = r.f32("points");
  s.local_features.resize(n, fdim);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t c = 0; c < fdim; ++c) s.local_features(i, c) = r.f32("features");
  s.global_descriptor.resize(ddim);
  for (std::uint32_t c = 0; c < ddim; ++c) s.global_descriptor(c) = r.f32("descriptor");
  Eigen::Matrix4d pose;
  for (int rr = 0; rr < 4; ++rr)
    for (int c = 0; c < 4; ++c) pose(rr, c) = r.f32("pose");
  s.gt_pose = RigidTransform(pose.topLeftCorner<3, 3>(), pose.topRightCorner<3, 1>(),
                             detail::kStoredPoseTolerance);
  for (int c = 0; c < 3; ++c) s.geo_location(c) = r.f32("geo_location");
  s.validate();
  return s;
}

inline void write_scan(const std::filesystem::path& path, const ScanRecord& record) {
  detail::write_file_bytes(path, encode_scan(record));
}

inline ScanRecord read_scan(const std::filesystem::path& path) {
  return decode_scan(detail::read_file_bytes(path));
}

// ---------------------------------------------------------------------------
// Dataset manifest

enum class ScanRole { Database, Query };

struct ManifestEntry {
  ScanRole role;
  std::string id;
  std::string relative_path;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::string to_text() const {
    std::ostringstream os;
    os << "# role id path\n";
    for (const auto& e : entries) {
      os << (e.role == ScanRole::Database ? "db" : "query") << ' ' << e.id << ' ' << e.relative_path << '\n';
    }
    return os.str();
  }
};

inline DatasetManifest parse_manifest(std::istream& in) {
  DatasetManifest m;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string role, id, path, extra;
    if (!(ls >> role >> id >> path) || (ls >> extra)) {
      throw Error(ErrorCode::InvalidArgument, "manifest line " + std::to_string(lineno) +
                                                  ": expected '<db|query> <id> <path>'");
    }
    ManifestEntry e;
    if (role == "db") {
      e.role = ScanRole::Database;
    } else if (role == "query") {
      e.role = ScanRole::Query;
    } else {
      throw Error(ErrorCode::InvalidArgument,
                  "manifest line " + std::to_string(lineno) + ": unknown role '" + role + "'");
    }
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::DuplicateId, "manifest line " + std::to_string(lineno) + ": id '" + id +
                                              "' listed more than once");
    }
    e.id = std::move(id);
    e.relative_path = std::move(path);
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open manifest '" + path.string() + "'");
  return parse_manifest(in);
}

struct Dataset {
  std::vector<ScanRecord> database;
  std::vector<ScanRecord> queries;
};

inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const auto base = manifest_path.parent_path();

  Dataset ds;
  std::optional<std::pair<std::size_t, std::size_t>> dims;
  for (const auto& e : manifest.entries) {
    const auto path = base / e.relative_path;
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::MissingFile, "scan '" + e.id + "' references missing file '" + path.string() + "'");
    }
    ScanRecord s = read_scan(path);
    if (s.id != e.id) {
      throw Error(ErrorCode::InvalidArgument, "manifest id '" + e.id + "' but archive holds '" + s.id + "'");
    }
    const std::pair<std::size_t, std::size_t> d{s.feature_dim(), s.descriptor_dim()};
    if (!dims) {
      dims = d;
    } else if (*dims != d) {
      throw Error(ErrorCode::InconsistentDims,
                  "scan '" + e.id + "' has dims (" + std::to_string(d.first) + ", " + std::to_string(d.second) +
                      "), dataset uses (" + std::to_string(dims->first) + ", " + std::to_string(dims->second) + ")");
    }
    (e.role == ScanRole::Database ? ds.database : ds.queries).push_back(std::move(s));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Results file: one JSON object per line, each tagged by a "record" field.
// A header record leads, body records follow ("query" unless tagged
// otherwise) and a summary record closes the file when anything ran.

struct ResultsFile {
  nlohmann::ordered_json header;
  std::vector<nlohmann::ordered_json> records;
  std::optional<nlohmann::ordered_json> summary;
};

inline void write_results(const std::filesystem::path& path, const ResultsFile& results) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open results file '" + path.string() + "'");
  auto header = results.header;
  header["record"] = "header";
  out << header.dump() << '\n';
  for (auto rec : results.records) {
    if (!rec.contains("record")) rec["record"] = "query";
    out << rec.dump() << '\n';
  }
  if (results.summary) {
    auto summary = *results.summary;
    summary["record"] = "summary";
    out << summary.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

inline ResultsFile read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open results file '" + path.string() + "'");
  ResultsFile out;
  bool have_header = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::InvalidArgument, "results line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string kind = j.value("record", "");
    if (kind.empty()) {
      throw Error(ErrorCode::InvalidArgument, "results line " + std::to_string(lineno) + ": missing record kind");
    }
    if (kind == "header") {
      j.erase("record");
      out.header = std::move(j);
      have_header = true;
    } else if (kind == "summary") {
      j.erase("record");
      out.summary = std::move(j);
    } else {
      out.records.push_back(std::move(j));
    }
  }
  if (!have_header) throw Error(ErrorCode::InvalidArgument, "results file has no header record");
  return out;
}

}  // namespace sgv
