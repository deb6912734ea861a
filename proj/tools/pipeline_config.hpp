// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossview/bev/bev_view.hpp"
#include "crossview/core/types.hpp"
#include "crossview/errors.hpp"
#include "crossview/rv/range_view.hpp"
#include "crossview/scam/scam.hpp"

namespace crossview::cli {

/// Everything a pipeline run needs. Defaults mirror the library defaults;
/// a JSON config file overrides them and command-line flags override both.
struct PipelineConfig {
  RvConfig rv;
  BevConfig bev;
  VoxelConfig voxel;
  MovingClassSet moving_classes = default_moving_classes();
  std::vector<int> stride_options{1};
  int n_past = 1;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string weights;  ///< weight manifest path; empty = seeded random
  std::filesystem::path output_dir = "out";
  bool gate_sigmoid = false;
  int num_classes = 2;
  int scam_channels = 8;
  int mlp_hidden = 16;

  void validate() const {
    rv.validate();
    bev.validate();
    voxel.validate();
    if (stride_options.empty()) {
      throw ConfigError("stride_options must not be empty");
    }
    for (int s : stride_options) {
      if (s < 1) throw ConfigError("strides must be positive");
    }
    if (n_past < 1) throw ConfigError("n_past must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (scam_channels < 1 || mlp_hidden < 1) {
      throw ConfigError("feature widths must be >= 1");
    }
  }
};

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
    if (!ok) throw ConfigError("unknown config key '" + key + "' in " + where);
  }
}

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  detail::check_keys(j,
                     {"rv", "bev", "voxel", "moving_classes", "stride_options",
                      "n_past", "seed", "workers", "weights", "output_dir",
                      "gate_sigmoid", "num_classes", "scam_channels",
                      "mlp_hidden"},
                     "config");
  PipelineConfig cfg;
  if (j.contains("rv")) {
    const auto& r = j["rv"];
    detail::check_keys(r, {"h", "w", "fov_up_deg", "fov_down_deg"}, "rv");
    cfg.rv.h = r.value("h", cfg.rv.h);
    cfg.rv.w = r.value("w", cfg.rv.w);
    if (r.contains("fov_up_deg")) {
      cfg.rv.fov_up = r["fov_up_deg"].get<double>() * detail::kDegToRad;
    }
    if (r.contains("fov_down_deg")) {
      cfg.rv.fov_down = r["fov_down_deg"].get<double>() * detail::kDegToRad;
    }
  }
  if (j.contains("bev")) {
    const auto& b = j["bev"];
    detail::check_keys(b,
                       {"h", "w", "rho_min", "rho_max", "theta_min",
                        "theta_max", "z_min", "z_max", "window"},
                       "bev");
    cfg.bev.h = b.value("h", cfg.bev.h);
    cfg.bev.w = b.value("w", cfg.bev.w);
    cfg.bev.rho_min = b.value("rho_min", cfg.bev.rho_min);
    cfg.bev.rho_max = b.value("rho_max", cfg.bev.rho_max);
    cfg.bev.theta_min = b.value("theta_min", cfg.bev.theta_min);
    cfg.bev.theta_max = b.value("theta_max", cfg.bev.theta_max);
    cfg.bev.z_min = b.value("z_min", cfg.bev.z_min);
    cfg.bev.z_max = b.value("z_max", cfg.bev.z_max);
    cfg.bev.window = b.value("window", cfg.bev.window);
  }
  if (j.contains("voxel")) {
    const auto& v = j["voxel"];
    detail::check_keys(v, {"size", "min", "max"}, "voxel");
    cfg.voxel.voxel_size = v.value("size", cfg.voxel.voxel_size);
    auto vec3 = [](const nlohmann::json& a, const char* where) {
      if (!a.is_array() || a.size() != 3) {
        throw ConfigError(std::string(where) + " must be [x, y, z]");
      }
      return Eigen::Vector3d(a[0].get<double>(), a[1].get<double>(),
                             a[2].get<double>());
    };
    if (v.contains("min")) cfg.voxel.min_corner = vec3(v["min"], "voxel.min");
    if (v.contains("max")) cfg.voxel.max_corner = vec3(v["max"], "voxel.max");
  }
  if (j.contains("moving_classes")) {
    cfg.moving_classes.clear();
    for (const auto& c : j["moving_classes"]) {
      cfg.moving_classes.insert(c.get<std::uint16_t>());
    }
  }
  if (j.contains("stride_options")) {
    cfg.stride_options = j["stride_options"].get<std::vector<int>>();
  }
  cfg.n_past = j.value("n_past", cfg.n_past);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.workers = j.value("workers", cfg.workers);
  cfg.weights = j.value("weights", cfg.weights);
  if (j.contains("output_dir")) {
    cfg.output_dir = j["output_dir"].get<std::string>();
  }
  cfg.gate_sigmoid = j.value("gate_sigmoid", cfg.gate_sigmoid);
  cfg.num_classes = j.value("num_classes", cfg.num_classes);
  cfg.scam_channels = j.value("scam_channels", cfg.scam_channels);
  cfg.mlp_hidden = j.value("mlp_hidden", cfg.mlp_hidden);
  cfg.validate();
  return cfg;
}

/// Load the config from `path`, from $CROSSVIEW_CONFIG when no path is
/// given, or fall back to defaults.
inline PipelineConfig load_config(const std::string& path) {
  std::string resolved = path;
  if (resolved.empty()) {
    if (const char* env = std::getenv("CROSSVIEW_CONFIG");
        env != nullptr && *env != '\0') {
      resolved = env;
    }
  }
  if (resolved.empty()) return PipelineConfig{};

  std::ifstream in(resolved);
  if (!in.is_open()) throw ConfigError("cannot open config file: " + resolved);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

}  // namespace crossview::cli
