// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

#include "crossview/errors.hpp"

namespace crossview {

/// Single LiDAR return: sensor-centric Cartesian position plus intensity.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double e = 0.0;  ///< return intensity, dimensionless, >= 0

  double range() const { return std::sqrt(x * x + y * y + z * z); }
};

/// Ordered point list. Point index is identity: every operation in the
/// library preserves order, so index tables built on one representation
/// stay valid on all others.
struct PointCloud {
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Rigid-body transform, stored as a full 4x4 homogeneous matrix.
struct Pose {
  Eigen::Matrix4d transform = Eigen::Matrix4d::Identity();

  static Pose identity() { return Pose{}; }

  static Pose from_translation(double x, double y, double z) {
    Pose p;
    p.transform(0, 3) = x;
    p.transform(1, 3) = y;
    p.transform(2, 3) = z;
    return p;
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& v) const {
    return transform.block<3, 3>(0, 0) * v + transform.block<3, 1>(0, 3);
  }
};

/// Throws MathError unless the pose is a proper rigid transform:
/// orthonormal rotation block with det +1 and homogeneous last row.
inline void validate_rigid(const Pose& pose, double tol = 1e-6) {
  const Eigen::Matrix4d& t = pose.transform;
  if (!t.allFinite()) throw MathError("pose contains non-finite entries");
  if (std::abs(t(3, 0)) > tol || std::abs(t(3, 1)) > tol ||
      std::abs(t(3, 2)) > tol || std::abs(t(3, 3) - 1.0) > tol) {
    throw MathError("pose last row is not (0, 0, 0, 1)");
  }
  const Eigen::Matrix3d r = t.block<3, 3>(0, 0);
  const double ortho = (r * r.transpose() - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > tol) throw MathError("pose rotation block is not orthonormal");
  if (std::abs(r.determinant() - 1.0) > tol) {
    throw MathError("pose rotation block is not a proper rotation");
  }
}

/// Per-point semantic/instance labels plus the derived moving mask.
struct LabelSet {
  std::vector<std::uint16_t> class_id;
  std::vector<std::uint16_t> instance_id;
  std::vector<std::uint8_t> moving;  ///< 1 iff class_id is in the moving set

  std::size_t size() const { return class_id.size(); }
};

using MovingClassSet = std::unordered_set<std::uint16_t>;

/// SemanticKITTI moving classes (moving car, bus, person, bicyclist, ...).
inline const MovingClassSet& default_moving_classes() {
  static const MovingClassSet set{252, 253, 254, 255, 256, 257, 258, 259};
  return set;
}

inline bool is_moving_class(std::uint16_t class_id, const MovingClassSet& set) {
  return set.count(class_id) != 0;
}

/// One scan with its odometry pose, optional ground truth, and sequence index.
struct ScanFrame {
  PointCloud cloud;
  Pose pose;
  std::optional<LabelSet> labels;
  int index = 0;
};

}  // namespace crossview
