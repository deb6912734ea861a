// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "crossview/core/types.hpp"
#include "crossview/errors.hpp"

namespace crossview {

/// Axis-aligned box whose six faces are sampled at `density` points/m^2.
struct SurfaceBox {
  Eigen::Vector3d center{0.0, 0.0, 0.0};
  Eigen::Vector3d size{1.0, 1.0, 1.0};
  double density = 50.0;
};

struct MoverSpec {
  SurfaceBox box;
  Eigen::Vector3d velocity{0.0, 0.0, 0.0};  ///< metres per frame
};

/// Square ground patch centred on the world origin; extent <= 0 disables it.
struct GroundPlane {
  double extent = 0.0;
  double z = 0.0;
  double density = 0.0;
};

/// Linear ego trajectory; the pose of frame f translates by start + f * velocity.
struct EgoPath {
  Eigen::Vector3d start{0.0, 0.0, 0.0};
  Eigen::Vector3d velocity{0.0, 0.0, 0.0};
};

/// Deterministic dynamic-scene description.
///
/// World geometry is sampled once from the seed; static points keep their
/// world position for the whole sequence and mover points advance rigidly by
/// the mover velocity, so ego-compensated static content matches across
/// frames to machine precision.
struct SceneSpec {
  int frame_count = 2;
  std::uint64_t seed = 0;
  GroundPlane ground;
  std::vector<SurfaceBox> static_boxes;
  std::vector<MoverSpec> movers;
  EgoPath ego;

  void validate() const {
    if (frame_count < 2) throw ConfigError("scene needs at least two frames");
    if (ground.extent > 0.0 && !(ground.density > 0.0)) {
      throw ConfigError("ground density must be > 0");
    }
    auto check_box = [](const SurfaceBox& b) {
      if (!(b.density > 0.0)) throw ConfigError("box density must be > 0");
      if (!(b.size.minCoeff() > 0.0)) {
        throw ConfigError("box sizes must be > 0");
      }
    };
    for (const SurfaceBox& b : static_boxes) check_box(b);
    for (const MoverSpec& m : movers) check_box(m.box);
  }

  /// Static world viewed from an ego translating 0.5 m/frame.
  static SceneSpec default_static_scene() {
    SceneSpec spec;
    spec.frame_count = 10;
    spec.seed = 3;
    spec.ground = GroundPlane{40.0, -1.7, 12.0};
    spec.ego.velocity = Eigen::Vector3d(0.5, 0.0, 0.0);
    spec.static_boxes = {
        SurfaceBox{{10.0, 5.0, -0.95}, {4.0, 2.0, 1.5}, 40.0},
        SurfaceBox{{8.0, -6.0, -0.95}, {4.0, 2.0, 1.5}, 40.0},
        SurfaceBox{{-9.0, 4.0, -0.7}, {2.0, 2.0, 2.0}, 40.0},
        SurfaceBox{{15.0, -2.0, -1.2}, {3.0, 1.5, 1.0}, 40.0},
    };
    return spec;
  }

  /// Car-sized box 10 m ahead receding radially at 1 m/frame, static ego.
  static SceneSpec default_mover_scene() {
    SceneSpec spec;
    spec.frame_count = 12;
    spec.seed = 7;
    MoverSpec mover;
    mover.box = SurfaceBox{{10.0, 0.0, 0.75}, {4.0, 2.0, 1.5}, 900.0};
    mover.velocity = Eigen::Vector3d(1.0, 0.0, 0.0);
    spec.movers = {mover};
    return spec;
  }
};

struct SyntheticSequence {
  std::vector<ScanFrame> frames;
};

namespace detail {

struct WorldPoint {
  Eigen::Vector3d position;
  double intensity;
};

inline void sample_rect(std::vector<WorldPoint>& out, std::mt19937_64& rng,
                        const Eigen::Vector3d& corner,
                        const Eigen::Vector3d& edge_a,
                        const Eigen::Vector3d& edge_b, double density) {
  const double area = edge_a.norm() * edge_b.norm();
  const auto count =
      static_cast<std::size_t>(std::max<long long>(1, std::llround(area * density)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    const double a = unit(rng);
    const double b = unit(rng);
    out.push_back(WorldPoint{corner + a * edge_a + b * edge_b, unit(rng)});
  }
}

inline void sample_box(std::vector<WorldPoint>& out, std::mt19937_64& rng,
                       const Eigen::Vector3d& center,
                       const Eigen::Vector3d& size, double density) {
  const Eigen::Vector3d half = size / 2.0;
  const Eigen::Vector3d lo = center - half;
  const Eigen::Vector3d ex(size.x(), 0.0, 0.0);
  const Eigen::Vector3d ey(0.0, size.y(), 0.0);
  const Eigen::Vector3d ez(0.0, 0.0, size.z());
  // x- and x+ faces, then y, then z
  sample_rect(out, rng, lo, ey, ez, density);
  sample_rect(out, rng, lo + ex, ey, ez, density);
  sample_rect(out, rng, lo, ex, ez, density);
  sample_rect(out, rng, lo + ey, ex, ez, density);
  sample_rect(out, rng, lo, ex, ey, density);
  sample_rect(out, rng, lo + ez, ex, ey, density);
}

inline Eigen::Matrix4d rigid_inverse(const Eigen::Matrix4d& t) {
  Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
  const Eigen::Matrix3d rt = t.block<3, 3>(0, 0).transpose();
  inv.block<3, 3>(0, 0) = rt;
  inv.block<3, 1>(0, 3) = -rt * t.block<3, 1>(0, 3);
  return inv;
}

}  // namespace detail

/// Expected range-view residual for a pixel whose range moved r0 -> r1.
inline double analytic_rv_residual(double r0, double r1) {
  if (!(r0 > 0.0)) {
    throw DegenerateInput("reference range must be positive");
  }
  return std::abs(r1 - r0) / r0;
}

/// Generate the full sequence: clouds in the per-frame sensor frame, poses,
/// and exact moving/static labels (class 252 with instance = mover ordinal
/// + 1 for mover points, class 9 otherwise).
inline SyntheticSequence generate_sequence(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  std::vector<detail::WorldPoint> static_world;
  if (spec.ground.extent > 0.0) {
    const double e = spec.ground.extent;
    detail::sample_rect(static_world, rng,
                        Eigen::Vector3d(-e / 2.0, -e / 2.0, spec.ground.z),
                        Eigen::Vector3d(e, 0.0, 0.0),
                        Eigen::Vector3d(0.0, e, 0.0), spec.ground.density);
  }
  for (const SurfaceBox& box : spec.static_boxes) {
    detail::sample_box(static_world, rng, box.center, box.size, box.density);
  }

  // Mover surfaces are sampled once around the origin and advected rigidly.
  std::vector<std::vector<detail::WorldPoint>> mover_local(spec.movers.size());
  for (std::size_t m = 0; m < spec.movers.size(); ++m) {
    detail::sample_box(mover_local[m], rng, Eigen::Vector3d::Zero(),
                       spec.movers[m].box.size, spec.movers[m].box.density);
  }

  SyntheticSequence seq;
  seq.frames.resize(static_cast<std::size_t>(spec.frame_count));
  for (int f = 0; f < spec.frame_count; ++f) {
    ScanFrame& frame = seq.frames[static_cast<std::size_t>(f)];
    frame.index = f;
    const Eigen::Vector3d t = spec.ego.start + static_cast<double>(f) * spec.ego.velocity;
    frame.pose = Pose::from_translation(t.x(), t.y(), t.z());
    const Eigen::Matrix4d world_to_sensor =
        detail::rigid_inverse(frame.pose.transform);

    LabelSet labels;
    auto emit = [&](const Eigen::Vector3d& world, double intensity,
                    std::uint16_t class_id, std::uint16_t instance_id) {
      const Eigen::Vector3d s =
          world_to_sensor.block<3, 3>(0, 0) * world +
          world_to_sensor.block<3, 1>(0, 3);
      frame.cloud.points.push_back(Point{s.x(), s.y(), s.z(), intensity});
      labels.class_id.push_back(class_id);
      labels.instance_id.push_back(instance_id);
      labels.moving.push_back(
          is_moving_class(class_id, default_moving_classes()) ? 1 : 0);
    };

    for (const detail::WorldPoint& wp : static_world) {
      emit(wp.position, wp.intensity, 9, 0);
    }
    for (std::size_t m = 0; m < spec.movers.size(); ++m) {
      const Eigen::Vector3d offset =
          spec.movers[m].box.center +
          static_cast<double>(f) * spec.movers[m].velocity;
      for (const detail::WorldPoint& wp : mover_local[m]) {
        emit(wp.position + offset, wp.intensity, 252,
             static_cast<std::uint16_t>(m + 1));
      }
    }
    frame.labels = std::move(labels);
  }
  return seq;
}

namespace detail {

inline void check_keys(const nlohmann::json& obj,
                       std::initializer_list<const char*> allowed,
                       const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (const char* name : allowed) {
      if (key == name) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

inline Eigen::Vector3d vec3_from_json(const nlohmann::json& j,
                                      const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(where + " must be an array of three numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

/// Parse a scene description with a strict schema; unknown keys are errors.
inline SceneSpec scene_spec_from_json(const nlohmann::json& j) {
  detail::check_keys(
      j, {"frames", "seed", "ground", "ego", "static_boxes", "movers"},
      "scene");
  SceneSpec spec;
  if (j.contains("frames")) spec.frame_count = j["frames"].get<int>();
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("ground")) {
    detail::check_keys(j["ground"], {"extent", "z", "density"}, "ground");
    spec.ground.extent = j["ground"].value("extent", 0.0);
    spec.ground.z = j["ground"].value("z", 0.0);
    spec.ground.density = j["ground"].value("density", 0.0);
  }
  if (j.contains("ego")) {
    detail::check_keys(j["ego"], {"start", "velocity"}, "ego");
    if (j["ego"].contains("start")) {
      spec.ego.start = detail::vec3_from_json(j["ego"]["start"], "ego.start");
    }
    if (j["ego"].contains("velocity")) {
      spec.ego.velocity =
          detail::vec3_from_json(j["ego"]["velocity"], "ego.velocity");
    }
  }
  auto parse_box = [](const nlohmann::json& b,
                      const std::string& where) -> SurfaceBox {
    detail::check_keys(b, {"center", "size", "density"}, where);
    SurfaceBox box;
    box.center = detail::vec3_from_json(b.at("center"), where + ".center");
    box.size = detail::vec3_from_json(b.at("size"), where + ".size");
    box.density = b.value("density", 50.0);
    return box;
  };
  if (j.contains("static_boxes")) {
    for (const auto& b : j["static_boxes"]) {
      spec.static_boxes.push_back(parse_box(b, "static_boxes[]"));
    }
  }
  if (j.contains("movers")) {
    for (const auto& b : j["movers"]) {
      detail::check_keys(b, {"center", "size", "density", "velocity"},
                         "movers[]");
      MoverSpec mover;
      nlohmann::json box = b;
      box.erase("velocity");
      mover.box = parse_box(box, "movers[]");
      mover.velocity =
          detail::vec3_from_json(b.at("velocity"), "movers[].velocity");
      spec.movers.push_back(mover);
    }
  }
  spec.validate();
  return spec;
}

}  // namespace crossview
