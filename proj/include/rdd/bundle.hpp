#pragma once

// Demonstration bundles on disk.
//
//   <root>/manifest.json   UTF-8 JSON, {"format_version": 1, "demos": [DemoEntry...]}
//   <root>/<matrix_file>   RDDM matrix: 16-byte header then float32 rows
//
// RDDM header (little-endian): "RDDM", u32 frame_count, u32 dim, u32 reserved (0).
//
// Entries sharing an id and a non-empty camera_group are views of one
// demonstration; they are concatenated per frame in manifest order.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdd/binary_io.hpp"
#include "rdd/core.hpp"
#include "rdd/error.hpp"

namespace rdd {

inline constexpr int kManifestVersion = 1;
inline constexpr char kMatrixMagic[4] = {'R', 'D', 'D', 'M'};

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;  // row-major

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  require(m.values.size() == m.rows * m.cols, Errc::invalid_argument,
          "matrix shape does not match its data");
  binary::Writer w;
  w.bytes(kMatrixMagic, 4);
  w.u32(static_cast<std::uint32_t>(m.rows));
  w.u32(static_cast<std::uint32_t>(m.cols));
  w.u32(0);
  for (float x : m.values) w.f32(x);
  w.save(path);
}

inline Matrix read_matrix(const std::filesystem::path& path) {
  auto r = binary::Reader::from_file(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMatrixMagic, 4) != 0) {
    fail(Errc::format, "'" + path.string() + "' is not an RDDM matrix file (bad magic)");
  }
  Matrix m;
  m.rows = r.u32();
  m.cols = r.u32();
  r.u32();  // reserved
  if (r.remaining() != m.rows * m.cols * 4) {
    fail(Errc::format, "'" + path.string() + "' payload size does not match its header");
  }
  m.values.resize(m.rows * m.cols);
  for (auto& x : m.values) x = r.f32();
  return m;
}

struct DemoEntry {
  std::string id;
  std::string matrix_file;
  std::size_t frame_count = 0;
  std::size_t dim = 0;
  std::optional<std::vector<std::size_t>> boundaries;
  std::optional<std::string> camera_group;

  friend bool operator==(const DemoEntry&, const DemoEntry&) = default;
};

struct Bundle {
  std::filesystem::path root;
  std::vector<DemoEntry> manifest;
};

struct LoadedBundle {
  Bundle bundle;
  std::vector<Demonstration> demos;
};

namespace detail {

inline std::string entry_label(const DemoEntry& e, std::size_t index) {
  return "entry #" + std::to_string(index) + " (id '" + e.id + "', file '" + e.matrix_file + "')";
}

inline DemoEntry parse_entry(const nlohmann::json& j, std::size_t index) {
  const std::string where = "manifest entry #" + std::to_string(index);
  if (!j.is_object()) fail(Errc::invalid_data, where + " is not an object");
  DemoEntry e;
  try {
    e.id = j.at("id").get<std::string>();
    e.matrix_file = j.at("matrix_file").get<std::string>();
    e.frame_count = j.at("frame_count").get<std::size_t>();
    e.dim = j.at("dim").get<std::size_t>();
    if (j.contains("boundaries") && !j.at("boundaries").is_null()) {
      e.boundaries = j.at("boundaries").get<std::vector<std::size_t>>();
    }
    if (j.contains("camera_group") && !j.at("camera_group").is_null()) {
      e.camera_group = j.at("camera_group").get<std::string>();
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(Errc::invalid_data, where + ": " + ex.what());
  }
  return e;
}

inline nlohmann::ordered_json entry_json(const DemoEntry& e) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["matrix_file"] = e.matrix_file;
  j["frame_count"] = e.frame_count;
  j["dim"] = e.dim;
  if (e.boundaries) j["boundaries"] = *e.boundaries;
  if (e.camera_group) j["camera_group"] = *e.camera_group;
  return j;
}

}  // namespace detail

/// Reads and validates a bundle. Every per-frame embedding is L2-normalized;
/// multi-view groups are normalized per view, concatenated, then renormalized.
inline LoadedBundle read_bundle(const std::filesystem::path& root) {
  const auto manifest_path = root / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) fail(Errc::io, "missing manifest: '" + manifest_path.string() + "'");

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    fail(Errc::invalid_data, "malformed manifest '" + manifest_path.string() + "': " + ex.what());
  }
  if (!doc.is_object() || !doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
    fail(Errc::format, "manifest lacks an integer format_version");
  }
  if (doc["format_version"].get<int>() != kManifestVersion) {
    fail(Errc::format, "unsupported manifest format_version " + doc["format_version"].dump() +
                           " (expected " + std::to_string(kManifestVersion) + ")");
  }
  if (!doc.contains("demos") || !doc["demos"].is_array()) {
    fail(Errc::invalid_data, "manifest lacks a 'demos' array");
  }

  LoadedBundle out;
  out.bundle.root = root;
  for (std::size_t i = 0; i < doc["demos"].size(); ++i) {
    out.bundle.manifest.push_back(detail::parse_entry(doc["demos"][i], i));
  }

  // Group entries into demonstrations, preserving first-appearance order.
  struct Group {
    std::vector<std::size_t> entries;
  };
  std::vector<Group> groups;
  std::map<std::string, std::size_t> group_of_id;
  for (std::size_t i = 0; i < out.bundle.manifest.size(); ++i) {
    const auto& e = out.bundle.manifest[i];
    auto it = group_of_id.find(e.id);
    if (it == group_of_id.end()) {
      group_of_id.emplace(e.id, groups.size());
      groups.push_back({{i}});
      continue;
    }
    const auto& first = out.bundle.manifest[groups[it->second].entries.front()];
    if (!e.camera_group || !first.camera_group || *e.camera_group != *first.camera_group) {
      fail(Errc::invalid_data, "duplicate demo id '" + e.id + "' in " + detail::entry_label(e, i) +
                                   " without a shared camera_group");
    }
    groups[it->second].entries.push_back(i);
  }

  std::optional<std::size_t> bundle_dim;
  std::size_t dim_entry = 0;
  for (const auto& g : groups) {
    const auto& head = out.bundle.manifest[g.entries.front()];
    const std::size_t frames = head.frame_count;
    std::size_t total_dim = 0;
    std::vector<Matrix> views;
    for (std::size_t idx : g.entries) {
      const auto& e = out.bundle.manifest[idx];
      const auto label = detail::entry_label(e, idx);
      if (e.boundaries) Demonstration::validate_boundaries(e.id, *e.boundaries, e.frame_count);
      const auto path = root / e.matrix_file;
      if (!std::filesystem::exists(path)) {
        fail(Errc::io, "missing matrix file for " + label);
      }
      Matrix m = read_matrix(path);
      if (m.rows != e.frame_count) {
        fail(Errc::invalid_data, "frame_count mismatch for " + label + ": manifest says " +
                                     std::to_string(e.frame_count) + ", file has " +
                                     std::to_string(m.rows));
      }
      if (m.cols != e.dim) {
        fail(Errc::dimension_mismatch, "dim mismatch for " + label + ": manifest says " +
                                           std::to_string(e.dim) + ", file has " +
                                           std::to_string(m.cols));
      }
      if (e.frame_count != frames) {
        fail(Errc::invalid_data, "camera views of demo '" + e.id + "' disagree on frame_count");
      }
      if (e.boundaries && head.boundaries && *e.boundaries != *head.boundaries) {
        fail(Errc::invalid_data, "camera views of demo '" + e.id + "' disagree on boundaries");
      }
      for (std::size_t r = 0; r < m.rows; ++r) {
        try {
          normalize_in_place(std::span<float>(m.values).subspan(r * m.cols, m.cols));
        } catch (const Error&) {
          fail(Errc::invalid_data, "zero-norm frame " + std::to_string(r) + " in " + label);
        }
      }
      total_dim += m.cols;
      views.push_back(std::move(m));
    }

    std::vector<float> frames_data;
    if (views.size() == 1) {
      frames_data = std::move(views.front().values);
    } else {
      frames_data.reserve(frames * total_dim);
      for (std::size_t r = 0; r < frames; ++r) {
        const std::size_t start = frames_data.size();
        for (const auto& v : views) {
          frames_data.insert(frames_data.end(), v.values.begin() + r * v.cols,
                             v.values.begin() + (r + 1) * v.cols);
        }
        normalize_in_place(std::span<float>(frames_data).subspan(start, total_dim));
      }
    }

    if (!bundle_dim) {
      bundle_dim = total_dim;
      dim_entry = g.entries.front();
    } else if (*bundle_dim != total_dim) {
      const auto& a = out.bundle.manifest[dim_entry];
      fail(Errc::dimension_mismatch,
           "dims disagree across bundle: " + detail::entry_label(a, dim_entry) + " has dim " +
               std::to_string(*bundle_dim) + ", " + detail::entry_label(head, g.entries.front()) +
               " has dim " + std::to_string(total_dim));
    }

    std::optional<std::vector<std::size_t>> boundaries;
    for (std::size_t idx : g.entries) {
      if (out.bundle.manifest[idx].boundaries) {
        boundaries = out.bundle.manifest[idx].boundaries;
        break;
      }
    }
    out.demos.emplace_back(head.id, total_dim, std::move(frames_data), std::move(boundaries));
  }
  return out;
}

/// Writes one single-view entry per demonstration. Files are named by
/// position so arbitrary ids stay filesystem-safe.
inline Bundle write_bundle(const std::filesystem::path& root, std::span<const Demonstration> demos) {
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) fail(Errc::io, "cannot create bundle directory '" + root.string() + "': " + ec.message());

  Bundle bundle;
  bundle.root = root;
  std::set<std::string> seen;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < demos.size(); ++i) {
    const auto& d = demos[i];
    require(seen.insert(d.id()).second, Errc::invalid_data, "duplicate demo id '" + d.id() + "'");
    char name[32];
    std::snprintf(name, sizeof(name), "demo_%05zu.rddm", i);
    DemoEntry e{d.id(), name, d.length(), d.dim(), d.boundaries(), std::nullopt};
    write_matrix(root / e.matrix_file, Matrix{d.length(), d.dim(), d.frames()});
    entries.push_back(detail::entry_json(e));
    bundle.manifest.push_back(std::move(e));
  }

  nlohmann::ordered_json doc;
  doc["format_version"] = kManifestVersion;
  doc["demos"] = std::move(entries);
  std::ofstream out(root / "manifest.json", std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write manifest in '" + root.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) fail(Errc::io, "write failed for manifest in '" + root.string() + "'");
  return bundle;
}

/// One interval per consecutive pair of expert boundaries.
inline std::vector<Interval> reference_intervals(std::span<const Demonstration> demos) {
  std::string missing;
  for (const auto& d : demos) {
    if (!d.has_boundaries()) missing += (missing.empty() ? "" : ", ") + d.id();
  }
  require(missing.empty(), Errc::invalid_data, "demos lacking boundaries: " + missing);

  std::vector<Interval> out;
  for (const auto& d : demos) {
    std::size_t begin = 0;
    for (std::size_t end : *d.boundaries()) {
      out.push_back(Interval{d.id(), begin, end});
      begin = end;
    }
  }
  return out;
}

}  // namespace rdd
