// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "crossview/core/types.hpp"
#include "crossview/errors.hpp"
#include "crossview/io/container.hpp"
#include "crossview/io/scan_io.hpp"

namespace crossview {

/// Spherical projection geometry. Angles are radians; the vertical field of
/// view spans [-fov_down, +fov_up] around the sensor horizon.
struct RvConfig {
  int h = 64;
  int w = 2048;
  double fov_up = 3.0 * std::numbers::pi / 180.0;
  double fov_down = 25.0 * std::numbers::pi / 180.0;

  double fov() const { return fov_up + fov_down; }

  /// HDL-64E geometry as used by the KITTI odometry scans.
  static RvConfig hdl64() { return RvConfig{}; }

  void validate() const {
    if (h < 1 || w < 1) throw ConfigError("range image dims must be >= 1");
    if (!(fov() > 0.0)) throw ConfigError("vertical field of view must be > 0");
  }
};

struct PixelUV {
  int u = 0;  ///< column
  int v = 0;  ///< row

  bool operator==(const PixelUV&) const = default;
};

/// Project one point into range-image pixel coordinates.
///
/// Column: u = 1/2 * (1 - atan2(y, x)/pi) * w, so +x maps to the center
/// column and azimuth grows to the left. Row: v = (1 - (asin(z/r) +
/// fov_down)/fov) * h, so the top row sits at +fov_up elevation. Both are
/// floored; u == w (the seam at azimuth -pi) is clamped to w-1. Returns
/// nullopt for points outside the vertical field of view.
inline std::optional<PixelUV> project_to_uv(const Point& p,
                                            const RvConfig& cfg) {
  const double r = p.range();
  if (r <= 0.0) throw DegenerateInput("cannot project a zero-range point");

  const double azimuth = std::atan2(p.y, p.x);
  const double elevation = std::asin(p.z / r);

  const double u_cont = 0.5 * (1.0 - azimuth / std::numbers::pi) * cfg.w;
  const double v_cont = (1.0 - (elevation + cfg.fov_down) / cfg.fov()) * cfg.h;

  int u = static_cast<int>(std::floor(u_cont));
  if (u >= cfg.w) u = cfg.w - 1;
  if (u < 0) u = 0;

  const int v = static_cast<int>(std::floor(v_cont));
  if (v < 0 || v >= cfg.h) return std::nullopt;
  return PixelUV{u, v};
}

/// Five-channel range image (x, y, z, range, intensity per pixel).
/// Pixels no point reached hold -1 in every channel.
struct RangeImage {
  static constexpr int kChannels = 5;
  static constexpr float kEmpty = -1.0f;

  int h = 0;
  int w = 0;
  std::vector<float> channels;  ///< kChannels planes of h*w

  RangeImage() = default;
  RangeImage(int h_, int w_)
      : h(h_), w(w_),
        channels(static_cast<std::size_t>(kChannels) * h_ * w_, kEmpty) {}

  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

  float at(int channel, int v, int u) const {
    return channels[channel * plane() + static_cast<std::size_t>(v) * w + u];
  }
  float& at(int channel, int v, int u) {
    return channels[channel * plane() + static_cast<std::size_t>(v) * w + u];
  }
  float range_at(int v, int u) const { return at(3, v, u); }
  bool valid_at(int v, int u) const { return range_at(v, u) > 0.0f; }

  FlatImage to_flat() const {
    FlatImage img(static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w),
                  kChannels);
    img.data = channels;
    return img;
  }
};

/// Pixel -> point index table. -1 marks pixels without a point; every other
/// entry is the index of the nearest point that projected there.
struct RangeIndexMap {
  int h = 0;
  int w = 0;
  std::vector<std::int32_t> idx;

  RangeIndexMap() = default;
  RangeIndexMap(int h_, int w_)
      : h(h_), w(w_), idx(static_cast<std::size_t>(h_) * w_, -1) {}

  std::int32_t at(int v, int u) const {
    return idx[static_cast<std::size_t>(v) * w + u];
  }
  std::int32_t& at(int v, int u) {
    return idx[static_cast<std::size_t>(v) * w + u];
  }

  /// Index values fit f32 exactly for clouds below 2^24 points.
  FlatImage to_flat() const {
    FlatImage img(static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w),
                  1);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      img.data[i] = static_cast<float>(idx[i]);
    }
    return img;
  }
};

struct ProjectionStats {
  std::size_t points = 0;
  std::size_t projected = 0;          ///< landed on a pixel (may lose a duel)
  std::size_t skipped_zero_range = 0;
  std::size_t out_of_fov = 0;
  std::size_t filled_pixels = 0;
};

struct RangeProjection {
  RangeImage image;
  RangeIndexMap index;
  ProjectionStats stats;
};

/// Build the range image and its pixel -> point index table.
///
/// Zero-range points are skipped and counted. When several points land on
/// one pixel only the smallest range survives; ties keep the earliest point
/// so the result is independent of everything but cloud order.
inline RangeProjection build_range_image(const PointCloud& cloud,
                                         const RvConfig& cfg) {
  cfg.validate();
  RangeProjection out;
  out.image = RangeImage(cfg.h, cfg.w);
  out.index = RangeIndexMap(cfg.h, cfg.w);
  out.stats.points = cloud.size();

  std::vector<double> best_range(out.image.plane(),
                                 std::numeric_limits<double>::infinity());

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    const double r = p.range();
    if (r <= 0.0) {
      ++out.stats.skipped_zero_range;
      continue;
    }
    const std::optional<PixelUV> px = project_to_uv(p, cfg);
    if (!px) {
      ++out.stats.out_of_fov;
      continue;
    }
    ++out.stats.projected;
    const std::size_t flat = static_cast<std::size_t>(px->v) * cfg.w + px->u;
    if (r < best_range[flat]) {
      best_range[flat] = r;
      out.image.at(0, px->v, px->u) = static_cast<float>(p.x);
      out.image.at(1, px->v, px->u) = static_cast<float>(p.y);
      out.image.at(2, px->v, px->u) = static_cast<float>(p.z);
      out.image.at(3, px->v, px->u) = static_cast<float>(r);
      out.image.at(4, px->v, px->u) = static_cast<float>(p.e);
      out.index.at(px->v, px->u) = static_cast<std::int32_t>(i);
    }
  }
  for (double r : best_range) {
    if (std::isfinite(r)) ++out.stats.filled_pixels;
  }
  return out;
}

/// Normalized range differences against compensated past frames, one channel
/// per past frame. Pixels not valid in both frames hold exactly 0.
struct RvResidualMap {
  int h = 0;
  int w = 0;
  int k = 0;  ///< number of past frames / channels
  std::vector<float> values;

  RvResidualMap() = default;
  RvResidualMap(int h_, int w_, int k_)
      : h(h_), w(w_), k(k_),
        values(static_cast<std::size_t>(h_) * w_ * k_, 0.0f) {}

  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

  float at(int channel, int v, int u) const {
    return values[channel * plane() + static_cast<std::size_t>(v) * w + u];
  }
  float& at(int channel, int v, int u) {
    return values[channel * plane() + static_cast<std::size_t>(v) * w + u];
  }

  FlatImage to_flat() const {
    FlatImage img(static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w),
                  static_cast<std::uint32_t>(k));
    img.data = values;
    return img;
  }
};

/// Optional per-channel accounting of pixels valid in both frames.
struct RvResidualStats {
  std::vector<std::size_t> doubly_valid;
};

/// Build the range-view residual map of `current` against each past frame.
///
/// Each past cloud is rigidly moved into the current frame, re-projected,
/// and compared pixel-wise on the range channel: |r_past - r_now| / r_now
/// where both pixels are valid, 0 otherwise. Channel order follows `past`.
inline RvResidualMap build_rv_residual(const ScanFrame& current,
                                       const std::vector<ScanFrame>& past,
                                       const RvConfig& cfg,
                                       RvResidualStats* stats = nullptr) {
  if (past.empty()) {
    throw ConfigError("residual needs at least one past frame");
  }
  const RangeProjection now = build_range_image(current.cloud, cfg);
  RvResidualMap res(cfg.h, cfg.w, static_cast<int>(past.size()));
  if (stats) stats->doubly_valid.assign(past.size(), 0);

  for (std::size_t k = 0; k < past.size(); ++k) {
    const PointCloud moved =
        compensate(past[k].cloud, past[k].pose, current.pose);
    const RangeProjection prev = build_range_image(moved, cfg);
    for (int v = 0; v < cfg.h; ++v) {
      for (int u = 0; u < cfg.w; ++u) {
        const float r0 = now.image.range_at(v, u);
        const float rk = prev.image.range_at(v, u);
        if (r0 > 0.0f && rk > 0.0f) {
          const double d = std::abs(static_cast<double>(rk) - r0) / r0;
          res.at(static_cast<int>(k), v, u) = static_cast<float>(d);
          if (stats) ++stats->doubly_valid[k];
        }
      }
    }
  }
  return res;
}

/// Uniformly pick a temporal stride from `options`. Deterministic for a
/// fixed generator state.
template <typename Rng>
inline int sample_delta_t(Rng& rng, const std::vector<int>& options) {
  if (options.empty()) throw ConfigError("stride options must not be empty");
  std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
  return options[pick(rng)];
}

}  // namespace crossview
