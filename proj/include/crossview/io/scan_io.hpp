// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crossview/core/types.hpp"
#include "crossview/errors.hpp"

namespace crossview {

namespace detail {

inline std::vector<char> read_all_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in.is_open()) {
    throw IoError("cannot open file: " + path.string());
  }
  const std::streamsize size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> bytes(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(bytes.data(), size)) {
    throw IoError("cannot read file: " + path.string());
  }
  return bytes;
}

inline void write_all_bytes(const std::filesystem::path& path,
                            const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.is_open()) {
    throw IoError("cannot open file for writing: " + path.string());
  }
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("short write: " + path.string());
}

// Fixed %.17g keeps a double -> text -> double round trip exact.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Read a scan stored as consecutive little-endian f32 quadruples
/// (x, y, z, intensity) with no header.
///
/// Coordinates are widened to double so that repeated rigid transforms
/// stay well below the file's own quantization; writing the cloud back
/// reproduces the original bytes exactly.
inline PointCloud read_point_cloud(const std::filesystem::path& path) {
  const std::vector<char> bytes = detail::read_all_bytes(path);
  if (bytes.size() % 16 != 0) {
    throw FormatError("scan file length " + std::to_string(bytes.size()) +
                      " is not a multiple of 16: " + path.string());
  }
  const std::size_t n = bytes.size() / 16;
  std::vector<float> raw(n * 4);
  if (n > 0) std::memcpy(raw.data(), bytes.data(), bytes.size());

  PointCloud cloud;
  cloud.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* p = raw.data() + i * 4;
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]) ||
        !std::isfinite(p[3])) {
      throw FormatError("non-finite value in point " + std::to_string(i) +
                        " of " + path.string());
    }
    cloud.points[i] = Point{p[0], p[1], p[2], p[3]};
  }
  return cloud;
}

/// Write a scan in the same f32 quadruple layout read_point_cloud consumes.
inline void write_point_cloud(const std::filesystem::path& path,
                              const PointCloud& cloud) {
  std::vector<float> raw(cloud.size() * 4);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    raw[i * 4 + 0] = static_cast<float>(p.x);
    raw[i * 4 + 1] = static_cast<float>(p.y);
    raw[i * 4 + 2] = static_cast<float>(p.z);
    raw[i * 4 + 3] = static_cast<float>(p.e);
  }
  detail::write_all_bytes(path, raw.data(), raw.size() * sizeof(float));
}

namespace detail {

inline Eigen::Matrix4d matrix_from_12(const std::vector<double>& v) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      m(r, c) = v[static_cast<std::size_t>(r * 4 + c)];
    }
  }
  return m;
}

inline std::vector<double> parse_doubles(const std::string& text) {
  std::istringstream iss(text);
  std::vector<double> values;
  double v;
  while (iss >> v) values.push_back(v);
  if (!iss.eof()) {
    std::string tail;
    iss.clear();
    iss >> tail;
    throw FormatError("unparseable token '" + tail + "'");
  }
  return values;
}

}  // namespace detail

/// Read the sensor->camera calibration ("Tr" line) from a KITTI odometry
/// calib.txt. Lines look like "KEY: v0 v1 ... v11"; only Tr is consumed.
inline Pose read_calibration(const std::filesystem::path& calib_path) {
  std::ifstream in(calib_path);
  if (!in.is_open()) {
    throw IoError("cannot open calib file: " + calib_path.string());
  }
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
    if (key != "Tr") continue;
    const std::vector<double> vals = detail::parse_doubles(line.substr(colon + 1));
    if (vals.size() != 12) {
      throw FormatError("calib Tr line has " + std::to_string(vals.size()) +
                        " values, expected 12: " + calib_path.string());
    }
    return Pose{detail::matrix_from_12(vals)};
  }
  throw FormatError("no Tr line in calib file: " + calib_path.string());
}

/// Read per-frame poses and convert them from the camera frame to the
/// sensor frame: P_velo = Tr^-1 * P_cam * Tr.
///
/// Pose files carry one row-major 3x4 matrix per line; the calib file
/// supplies Tr as read by read_calibration.
inline std::vector<Pose> read_poses(const std::filesystem::path& pose_path,
                                    const std::filesystem::path& calib_path) {
  const Pose tr = read_calibration(calib_path);
  if (std::abs(tr.transform.block<3, 3>(0, 0).determinant()) < 1e-12) {
    throw MathError("calibration Tr is not invertible: " + calib_path.string());
  }
  const Eigen::Matrix4d tr_inv = tr.transform.inverse();

  std::ifstream in(pose_path);
  if (!in.is_open()) {
    throw IoError("cannot open pose file: " + pose_path.string());
  }
  std::vector<Pose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<double> vals = detail::parse_doubles(line);
    if (vals.size() != 12) {
      throw FormatError("pose line " + std::to_string(line_no) + " has " +
                        std::to_string(vals.size()) +
                        " values, expected 12: " + pose_path.string());
    }
    const Eigen::Matrix4d p_cam = detail::matrix_from_12(vals);
    poses.push_back(Pose{tr_inv * p_cam * tr.transform});
  }
  return poses;
}

/// Write sensor-frame poses as KITTI pose lines (row-major 3x4 per line).
/// Pair with write_identity_calibration so read_poses returns them unchanged.
inline void write_poses(const std::filesystem::path& path,
                        const std::vector<Pose>& poses) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.is_open()) {
    throw IoError("cannot open pose file for writing: " + path.string());
  }
  for (const Pose& pose : poses) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        out << detail::format_double(pose.transform(r, c));
        if (r != 2 || c != 3) out << ' ';
      }
    }
    out << '\n';
  }
}

inline void write_identity_calibration(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.is_open()) {
    throw IoError("cannot open calib file for writing: " + path.string());
  }
  out << "Tr: 1 0 0 0 0 1 0 0 0 0 1 0\n";
}

/// Read a SemanticKITTI-style label file: one little-endian u32 per point,
/// semantic class in the low 16 bits, instance id in the high 16 bits.
inline LabelSet read_labels(const std::filesystem::path& path,
                            const MovingClassSet& moving_classes =
                                default_moving_classes()) {
  const std::vector<char> bytes = detail::read_all_bytes(path);
  if (bytes.size() % 4 != 0) {
    throw FormatError("label file length " + std::to_string(bytes.size()) +
                      " is not a multiple of 4: " + path.string());
  }
  const std::size_t n = bytes.size() / 4;
  std::vector<std::uint32_t> raw(n);
  if (n > 0) std::memcpy(raw.data(), bytes.data(), bytes.size());

  LabelSet labels;
  labels.class_id.resize(n);
  labels.instance_id.resize(n);
  labels.moving.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cls = static_cast<std::uint16_t>(raw[i] & 0xFFFFu);
    labels.class_id[i] = cls;
    labels.instance_id[i] = static_cast<std::uint16_t>(raw[i] >> 16);
    labels.moving[i] = is_moving_class(cls, moving_classes) ? 1 : 0;
  }
  return labels;
}

inline void write_labels(const std::filesystem::path& path,
                         const LabelSet& labels) {
  std::vector<std::uint32_t> raw(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    raw[i] = (static_cast<std::uint32_t>(labels.instance_id[i]) << 16) |
             labels.class_id[i];
  }
  detail::write_all_bytes(path, raw.data(), raw.size() * sizeof(std::uint32_t));
}

/// Rigidly move a cloud observed at pose_src into the frame of pose_dst:
/// p' = pose_dst^-1 * pose_src * p. Intensity and point order are unchanged.
inline PointCloud compensate(const PointCloud& cloud, const Pose& pose_src,
                             const Pose& pose_dst) {
  // Equal poses short-circuit: the result must match the input bit for bit.
  if (pose_src.transform == pose_dst.transform) return cloud;
  if (std::abs(pose_dst.transform.block<3, 3>(0, 0).determinant()) < 1e-12) {
    throw MathError("destination pose is not invertible");
  }
  const Eigen::Matrix4d m = pose_dst.transform.inverse() * pose_src.transform;
  PointCloud out;
  out.points.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    const double x = m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2) * p.z + m(0, 3);
    const double y = m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2) * p.z + m(1, 3);
    const double z = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2) * p.z + m(2, 3);
    out.points[i] = Point{x, y, z, p.e};
  }
  return out;
}

/// Lazily reads a KITTI-odometry-layout sequence directory:
///   <dir>/velodyne/*.bin, <dir>/poses.txt, <dir>/calib.txt,
///   optional <dir>/labels/*.label.
class SequenceReader {
 public:
  explicit SequenceReader(std::filesystem::path dir,
                          MovingClassSet moving_classes =
                              default_moving_classes())
      : dir_(std::move(dir)), moving_classes_(std::move(moving_classes)) {
    scan_files_ = sorted_files(dir_ / "velodyne", ".bin");
    if (scan_files_.empty()) {
      throw IoError("no scans under " + (dir_ / "velodyne").string());
    }
    label_files_ = sorted_files(dir_ / "labels", ".label");
    poses_ = read_poses(dir_ / "poses.txt", dir_ / "calib.txt");
    if (poses_.size() < scan_files_.size()) {
      throw FormatError("sequence has " + std::to_string(scan_files_.size()) +
                        " scans but only " + std::to_string(poses_.size()) +
                        " poses: " + dir_.string());
    }
  }

  std::size_t size() const { return scan_files_.size(); }
  bool has_labels() const { return label_files_.size() == scan_files_.size(); }
  const Pose& pose(std::size_t i) const { return poses_.at(i); }

  ScanFrame frame(std::size_t i) const {
    ScanFrame f;
    f.cloud = read_point_cloud(scan_files_.at(i));
    f.pose = poses_.at(i);
    f.index = static_cast<int>(i);
    if (has_labels()) {
      LabelSet labels = read_labels(label_files_[i], moving_classes_);
      if (labels.size() != f.cloud.size()) {
        throw FormatError("label/scan size mismatch at frame " +
                          std::to_string(i));
      }
      f.labels = std::move(labels);
    }
    return f;
  }

 private:
  static std::vector<std::filesystem::path> sorted_files(
      const std::filesystem::path& dir, const std::string& ext) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(dir)) return files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ext) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    return files;
  }

  std::filesystem::path dir_;
  MovingClassSet moving_classes_;
  std::vector<std::filesystem::path> scan_files_;
  std::vector<std::filesystem::path> label_files_;
  std::vector<Pose> poses_;
};

}  // namespace crossview
