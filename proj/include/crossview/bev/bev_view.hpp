// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "crossview/core/types.hpp"
#include "crossview/errors.hpp"
#include "crossview/io/container.hpp"
#include "crossview/io/scan_io.hpp"

namespace crossview {

/// Polar bird's-eye-view grid. h angular bins cover [theta_min, theta_max),
/// w radial bins cover [rho_min, rho_max); both intervals are half open.
/// `window` is the total temporal window length N (two halves of N/2).
struct BevConfig {
  int h = 360;  ///< angular bins
  int w = 480;  ///< radial bins
  double rho_min = 0.0;
  double rho_max = 50.0;
  double theta_min = -std::numbers::pi;
  double theta_max = std::numbers::pi;
  double z_min = -4.0;
  double z_max = 2.0;
  int window = 8;  ///< N, must be even and >= 2

  void validate() const {
    if (h < 1 || w < 1) throw ConfigError("bev grid dims must be >= 1");
    if (!(rho_max > rho_min) || rho_min < 0.0) {
      throw ConfigError("bev radial range must satisfy 0 <= rho_min < rho_max");
    }
    if (!(theta_max > theta_min)) throw ConfigError("bev angular range empty");
    if (!(z_max > z_min)) throw ConfigError("bev z range empty");
    if (window < 2 || window % 2 != 0) {
      throw ConfigError("bev window length must be even and >= 2");
    }
  }

  double span_limit() const { return z_max - z_min; }
};

struct PolarPoint {
  double rho = 0.0;
  double theta = 0.0;
  double z = 0.0;
};

/// Cartesian -> polar. The origin maps to rho = 0 with theta = 0
/// (the atan2 convention), keeping the transform total and deterministic.
inline PolarPoint to_polar(const Point& p) {
  return PolarPoint{std::hypot(p.x, p.y), std::atan2(p.y, p.x), p.z};
}

struct BevCell {
  int x = 0;  ///< radial bin
  int y = 0;  ///< angular bin

  bool operator==(const BevCell&) const = default;
};

/// Assign a polar point to its grid cell, or nullopt when rho or theta fall
/// outside the configured half-open ranges.
inline std::optional<BevCell> assign_grid(const PolarPoint& p,
                                          const BevConfig& cfg) {
  if (p.rho < cfg.rho_min || p.rho >= cfg.rho_max) return std::nullopt;
  if (p.theta < cfg.theta_min || p.theta >= cfg.theta_max) return std::nullopt;
  const int x = static_cast<int>(std::floor(
      (p.rho - cfg.rho_min) * cfg.w / (cfg.rho_max - cfg.rho_min)));
  const int y = static_cast<int>(std::floor(
      (p.theta - cfg.theta_min) * cfg.h / (cfg.theta_max - cfg.theta_min)));
  if (x < 0 || x >= cfg.w || y < 0 || y >= cfg.h) return std::nullopt;
  return BevCell{x, y};
}

/// Height-span image: per cell, max z - min z over in-range points
/// (z_min < z < z_max, both strict). Cells without points hold 0.
struct BevImage {
  int h = 0;
  int w = 0;
  std::vector<float> span;

  BevImage() = default;
  BevImage(int h_, int w_)
      : h(h_), w(w_), span(static_cast<std::size_t>(h_) * w_, 0.0f) {}

  float at(int y, int x) const {
    return span[static_cast<std::size_t>(y) * w + x];
  }
  float& at(int y, int x) {
    return span[static_cast<std::size_t>(y) * w + x];
  }

  FlatImage to_flat() const {
    FlatImage img(static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w),
                  1);
    img.data = span;
    return img;
  }
};

/// Point -> BEV cell table, (x, y) per point, (-1, -1) for excluded points.
struct BevIndexMap {
  std::vector<std::array<std::int32_t, 2>> coords;

  std::size_t size() const { return coords.size(); }
  bool valid(std::size_t i) const { return coords[i][0] >= 0; }
};

/// Project every point of a cloud onto the BEV grid.
/// Note: unlike the height-span image, the index table deliberately ignores
/// the z range — it exists to relate pixels across views, and dropping
/// points by height would orphan valid range-image pixels.
inline BevIndexMap build_t_p2b(const PointCloud& cloud, const BevConfig& cfg) {
  cfg.validate();
  BevIndexMap map;
  map.coords.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::optional<BevCell> cell =
        assign_grid(to_polar(cloud.points[i]), cfg);
    map.coords[i] = cell ? std::array<std::int32_t, 2>{cell->x, cell->y}
                         : std::array<std::int32_t, 2>{-1, -1};
  }
  return map;
}

/// Pool one or more frames into a single height-span image.
///
/// Every cloud is compensated into target_pose first. A cell with one point
/// spans 0; min/max are order-independent, so the image is invariant to
/// frame and point permutations bit for bit.
inline BevImage build_bev_image(const std::vector<ScanFrame>& frames,
                                const Pose& target_pose, const BevConfig& cfg) {
  cfg.validate();
  if (frames.empty()) throw ConfigError("bev image needs at least one frame");

  const std::size_t cells = static_cast<std::size_t>(cfg.h) * cfg.w;
  std::vector<double> z_min(cells, std::numeric_limits<double>::infinity());
  std::vector<double> z_max(cells, -std::numeric_limits<double>::infinity());

  for (const ScanFrame& frame : frames) {
    const PointCloud moved = compensate(frame.cloud, frame.pose, target_pose);
    for (const Point& p : moved.points) {
      if (!(p.z > cfg.z_min && p.z < cfg.z_max)) continue;
      const std::optional<BevCell> cell = assign_grid(to_polar(p), cfg);
      if (!cell) continue;
      const std::size_t flat =
          static_cast<std::size_t>(cell->y) * cfg.w + cell->x;
      z_min[flat] = std::min(z_min[flat], p.z);
      z_max[flat] = std::max(z_max[flat], p.z);
    }
  }

  BevImage img(cfg.h, cfg.w);
  for (std::size_t i = 0; i < cells; ++i) {
    if (z_max[i] >= z_min[i]) {
      img.span[i] = static_cast<float>(z_max[i] - z_min[i]);
    }
  }
  return img;
}

/// N-channel temporal residual stack. Channel 0 carries the newest window
/// difference I1 - I2; channel N/2 carries its negation; older differences
/// shift toward higher channel indices within each half.
struct BevResidualMap {
  int h = 0;
  int w = 0;
  int n = 0;
  std::vector<float> channels;

  BevResidualMap() = default;
  BevResidualMap(int h_, int w_, int n_)
      : h(h_), w(w_), n(n_),
        channels(static_cast<std::size_t>(h_) * w_ * n_, 0.0f) {}

  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

  float at(int channel, int y, int x) const {
    return channels[channel * plane() + static_cast<std::size_t>(y) * w + x];
  }
  float& at(int channel, int y, int x) {
    return channels[channel * plane() + static_cast<std::size_t>(y) * w + x];
  }

  FlatImage to_flat() const {
    FlatImage img(static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w),
                  static_cast<std::uint32_t>(n));
    img.data = channels;
    return img;
  }
};

/// Two adjacent temporal windows over the incoming frame stream. q1 holds
/// the newer N/2 frames, q2 the N/2 before them.
struct TemporalWindowPair {
  std::size_t half = 0;
  std::deque<ScanFrame> q1;  ///< newer half
  std::deque<ScanFrame> q2;  ///< older half
};

/// Streaming producer of BEV residual stacks.
///
/// Each push shifts every residual channel up by one, then writes the fresh
/// window difference d = bev(q1) - bev(q2) into channel 0 and -d into
/// channel N/2, both evaluated in the new frame's own coordinate system.
/// While q2 is still empty (the first N/2 pushes) the fresh difference is a
/// zero plane, so late channels of a young stream stay at their initial 0.
class BevResidualStream {
 public:
  explicit BevResidualStream(const BevConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    windows_.half = static_cast<std::size_t>(cfg_.window / 2);
    state_ = BevResidualMap(cfg_.h, cfg_.w, cfg_.window);
  }

  const BevConfig& config() const { return cfg_; }
  const TemporalWindowPair& windows() const { return windows_; }
  std::size_t frames_seen() const { return frames_seen_; }

  /// Advance both windows by one frame and return the updated stack.
  const BevResidualMap& push_frame_and_residual(const ScanFrame& frame) {
    if (frames_seen_ > 0 && frame.index <= last_index_) {
      throw OrderError("frame " + std::to_string(frame.index) +
                       " does not advance past frame " +
                       std::to_string(last_index_));
    }

    if (windows_.q1.size() == windows_.half) {
      if (windows_.q2.size() == windows_.half) windows_.q2.pop_front();
      windows_.q2.push_back(std::move(windows_.q1.front()));
      windows_.q1.pop_front();
    }
    windows_.q1.push_back(frame);
    last_index_ = frame.index;
    ++frames_seen_;

    shift_channels();

    const std::size_t plane = state_.plane();
    const int flip = cfg_.window / 2;
    if (!windows_.q2.empty()) {
      const BevImage i1 = build_bev_image(
          {windows_.q1.begin(), windows_.q1.end()}, frame.pose, cfg_);
      const BevImage i2 = build_bev_image(
          {windows_.q2.begin(), windows_.q2.end()}, frame.pose, cfg_);
      for (std::size_t i = 0; i < plane; ++i) {
        const float d = i1.span[i] - i2.span[i];
        state_.channels[i] = d;
        state_.channels[flip * plane + i] = -d;
      }
    } else {
      for (std::size_t i = 0; i < plane; ++i) {
        state_.channels[i] = 0.0f;
        state_.channels[flip * plane + i] = 0.0f;
      }
    }
    return state_;
  }

  const BevResidualMap& state() const { return state_; }

 private:
  void shift_channels() {
    const std::size_t plane = state_.plane();
    for (int c = cfg_.window - 1; c >= 1; --c) {
      std::copy_n(state_.channels.begin() + (c - 1) * plane, plane,
                  state_.channels.begin() + c * plane);
    }
  }

  BevConfig cfg_;
  TemporalWindowPair windows_;
  BevResidualMap state_;
  std::size_t frames_seen_ = 0;
  int last_index_ = 0;
};

}  // namespace crossview
