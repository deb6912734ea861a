// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crossview/bev/bev_view.hpp"
#include "crossview/errors.hpp"
#include "crossview/io/container.hpp"
#include "crossview/rv/range_view.hpp"
#include "crossview/tensor/tensor.hpp"
#include "crossview/tensor/weights.hpp"

namespace crossview {

/// 2D feature map, stored channels-first (C, H, W).
using FeatureMap2D = Tensor;

/// Per-range-pixel BEV coordinates: plane 0 holds the radial bin x, plane 1
/// the angular bin y. Pixels without a usable point hold (-1, -1).
struct CrossViewMap {
  int h = 0;
  int w = 0;
  std::vector<float> coords;  ///< 2 planes of h*w

  CrossViewMap() = default;
  CrossViewMap(int h_, int w_)
      : h(h_), w(w_), coords(2 * static_cast<std::size_t>(h_) * w_, -1.0f) {}

  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }

  float x_at(int v, int u) const {
    return coords[static_cast<std::size_t>(v) * w + u];
  }
  float y_at(int v, int u) const {
    return coords[plane() + static_cast<std::size_t>(v) * w + u];
  }
  bool valid_at(int v, int u) const { return x_at(v, u) >= 0.0f; }

  void set(int v, int u, float x, float y) {
    coords[static_cast<std::size_t>(v) * w + u] = x;
    coords[plane() + static_cast<std::size_t>(v) * w + u] = y;
  }

  Tensor to_tensor() const {
    return Tensor({2, static_cast<std::size_t>(h), static_cast<std::size_t>(w)},
                  coords);
  }

  FlatImage to_flat() const {
    FlatImage img(static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w),
                  2);
    img.data = coords;
    return img;
  }
};

/// Chain the two index tables into the BEV -> range-view coordinate map:
/// pixel -> point index -> BEV cell. A pixel goes to the sentinel when its
/// point index is -1 or the point fell outside the BEV grid.
inline CrossViewMap compose_b2r(const RangeIndexMap& t_r2p,
                                const BevIndexMap& t_p2b) {
  CrossViewMap map(t_r2p.h, t_r2p.w);
  const auto n = static_cast<std::int64_t>(t_p2b.size());
  for (int v = 0; v < t_r2p.h; ++v) {
    for (int u = 0; u < t_r2p.w; ++u) {
      const std::int32_t idx = t_r2p.at(v, u);
      if (idx == -1) continue;
      if (idx < 0 || idx >= n) {
        throw IndexError("range pixel references point " + std::to_string(idx) +
                         " outside the BEV table of size " + std::to_string(n));
      }
      const auto& cell = t_p2b.coords[static_cast<std::size_t>(idx)];
      if (cell[0] < 0) continue;
      map.set(v, u, static_cast<float>(cell[0]), static_cast<float>(cell[1]));
    }
  }
  return map;
}

/// Convolution weights for the fusion blocks and the BEV motion encoder.
///
/// Channel counts: range-view maps carry c_r channels, BEV maps c_b, and the
/// attention-fusion reduction runs through c_mid.
struct FusionWeights {
  int c_r = 0;
  int c_b = 0;
  int c_mid = 0;

  Tensor fuse_reduce_w, fuse_reduce_b;  ///< 1x1, (c_r + c_b) -> c_mid
  Tensor fuse_conv_w, fuse_conv_b;      ///< 3x3, c_mid -> c_r
  Tensor fuse_gate_w, fuse_gate_b;      ///< 1x1, c_r -> c_r
  Tensor sem_gate_w, sem_gate_b;        ///< 1x1, c_r -> c_r semantic gate
  Tensor chan_w, chan_b;                ///< 1x1 on pooled features, c_r -> c_r
  Tensor bev_conv1_w, bev_conv1_b;      ///< 3x3, c_b -> c_b
  Tensor bev_conv2_w, bev_conv2_b;      ///< 3x3, c_b -> c_b

  static FusionWeights zeros(int c_r, int c_b, int c_mid) {
    const auto r = static_cast<std::size_t>(c_r);
    const auto b = static_cast<std::size_t>(c_b);
    const auto m = static_cast<std::size_t>(c_mid);
    FusionWeights w;
    w.c_r = c_r;
    w.c_b = c_b;
    w.c_mid = c_mid;
    w.fuse_reduce_w = Tensor({m, r + b, 1, 1});
    w.fuse_reduce_b = Tensor({m});
    w.fuse_conv_w = Tensor({r, m, 3, 3});
    w.fuse_conv_b = Tensor({r});
    w.fuse_gate_w = Tensor({r, r, 1, 1});
    w.fuse_gate_b = Tensor({r});
    w.sem_gate_w = Tensor({r, r, 1, 1});
    w.sem_gate_b = Tensor({r});
    w.chan_w = Tensor({r, r, 1, 1});
    w.chan_b = Tensor({r});
    w.bev_conv1_w = Tensor({b, b, 3, 3});
    w.bev_conv1_b = Tensor({b});
    w.bev_conv2_w = Tensor({b, b, 3, 3});
    w.bev_conv2_b = Tensor({b});
    return w;
  }

  static FusionWeights random(std::uint64_t seed, int c_r, int c_b,
                              int c_mid) {
    FusionWeights w = zeros(c_r, c_b, c_mid);
    std::mt19937_64 rng(seed);
    for (Tensor* t :
         {&w.fuse_reduce_w, &w.fuse_reduce_b, &w.fuse_conv_w, &w.fuse_conv_b,
          &w.fuse_gate_w, &w.fuse_gate_b, &w.sem_gate_w, &w.sem_gate_b,
          &w.chan_w, &w.chan_b, &w.bev_conv1_w, &w.bev_conv1_b, &w.bev_conv2_w,
          &w.bev_conv2_b}) {
      *t = random_tensor(t->shape, rng);
    }
    return w;
  }

  TensorMap to_map() const {
    return TensorMap{
        {"fusion.reduce.weight", fuse_reduce_w},
        {"fusion.reduce.bias", fuse_reduce_b},
        {"fusion.conv.weight", fuse_conv_w},
        {"fusion.conv.bias", fuse_conv_b},
        {"fusion.gate.weight", fuse_gate_w},
        {"fusion.gate.bias", fuse_gate_b},
        {"fusion.sem_gate.weight", sem_gate_w},
        {"fusion.sem_gate.bias", sem_gate_b},
        {"fusion.channel.weight", chan_w},
        {"fusion.channel.bias", chan_b},
        {"bev_encoder.conv1.weight", bev_conv1_w},
        {"bev_encoder.conv1.bias", bev_conv1_b},
        {"bev_encoder.conv2.weight", bev_conv2_w},
        {"bev_encoder.conv2.bias", bev_conv2_b},
    };
  }

  static FusionWeights from_map(const TensorMap& map) {
    auto get = [&](const std::string& name) -> const Tensor& {
      const auto it = map.find(name);
      if (it == map.end()) {
        throw FormatError("weight set is missing tensor '" + name + "'");
      }
      return it->second;
    };
    FusionWeights w;
    w.fuse_reduce_w = get("fusion.reduce.weight");
    w.fuse_reduce_b = get("fusion.reduce.bias");
    w.fuse_conv_w = get("fusion.conv.weight");
    w.fuse_conv_b = get("fusion.conv.bias");
    w.fuse_gate_w = get("fusion.gate.weight");
    w.fuse_gate_b = get("fusion.gate.bias");
    w.sem_gate_w = get("fusion.sem_gate.weight");
    w.sem_gate_b = get("fusion.sem_gate.bias");
    w.chan_w = get("fusion.channel.weight");
    w.chan_b = get("fusion.channel.bias");
    w.bev_conv1_w = get("bev_encoder.conv1.weight");
    w.bev_conv1_b = get("bev_encoder.conv1.bias");
    w.bev_conv2_w = get("bev_encoder.conv2.weight");
    w.bev_conv2_b = get("bev_encoder.conv2.bias");
    w.c_r = static_cast<int>(w.fuse_conv_w.dim(0));
    w.c_b = static_cast<int>(w.bev_conv1_w.dim(0));
    w.c_mid = static_cast<int>(w.fuse_reduce_w.dim(0));
    return w;
  }
};

/// Resample BEV features at the coordinates of a cross-view map.
///
/// The 2-channel coordinate map is bilinearly resized to the target
/// resolution, coordinates are normalized into the sampler's [-1, 1] range
/// (the normalize/unnormalize pair cancels algebraically and is fused for
/// exactness), and m_b is sampled with zero padding. Sentinel coordinates
/// land a full pixel outside the grid and therefore produce zero features.
inline FeatureMap2D geometric_align(const FeatureMap2D& m_b,
                                    const CrossViewMap& map, int target_h,
                                    int target_w) {
  detail::require(m_b.rank() == 3, "geometric_align features must be (C,H,W)");
  if (target_h < 1 || target_w < 1) {
    throw ShapeError("geometric_align target resolution is empty");
  }
  if (map.h < 1 || map.w < 1) {
    throw ShapeError("geometric_align coordinate map is empty");
  }
  const Tensor grid = bilinear_resize(map.to_tensor(),
                                      static_cast<std::size_t>(target_h),
                                      static_cast<std::size_t>(target_w));
  const std::size_t c = m_b.dim(0);
  Tensor out({c, static_cast<std::size_t>(target_h),
              static_cast<std::size_t>(target_w)});
  for (std::size_t y = 0; y < out.dim(1); ++y) {
    for (std::size_t x = 0; x < out.dim(2); ++x) {
      const double px = grid.at3(0, y, x);
      const double py = grid.at3(1, y, x);
      for (std::size_t ci = 0; ci < c; ++ci) {
        out.at3(ci, y, x) = static_cast<float>(
            detail::sample_bilinear_pixel(m_b, ci, px, py));
      }
    }
  }
  return out;
}

/// Attention fusion of aligned BEV features into range-view features:
/// f = conv3x3(conv1x1(concat(m_r, m_b2r))); out = f * gate(f) + m_r.
///
/// The 1x1 gate carries no nonlinearity by default; `gate_sigmoid` switches
/// the alternative reading on.
inline FeatureMap2D attention_fuse(const FeatureMap2D& m_r,
                                   const FeatureMap2D& m_b2r,
                                   const FusionWeights& w,
                                   bool gate_sigmoid = false) {
  detail::require(m_r.rank() == 3 && m_b2r.rank() == 3,
                  "attention_fuse inputs must be (C, H, W)");
  detail::require(m_r.dim(1) == m_b2r.dim(1) && m_r.dim(2) == m_b2r.dim(2),
                  "attention_fuse spatial dims must agree");
  const std::size_t h = m_r.dim(1), width = m_r.dim(2);
  detail::require(
      w.fuse_reduce_w.dim(1) == m_r.dim(0) + m_b2r.dim(0),
      "attention_fuse weights expect a different concatenated channel count");
  detail::require(w.fuse_conv_w.dim(0) == m_r.dim(0),
                  "attention_fuse output channels must match m_r");

  Tensor cat({m_r.dim(0) + m_b2r.dim(0), h, width});
  std::copy(m_r.data.begin(), m_r.data.end(), cat.data.begin());
  std::copy(m_b2r.data.begin(), m_b2r.data.end(),
            cat.data.begin() + static_cast<std::ptrdiff_t>(m_r.numel()));

  const Tensor fused =
      conv2d(conv2d(cat, w.fuse_reduce_w, w.fuse_reduce_b), w.fuse_conv_w,
             w.fuse_conv_b);
  Tensor gate = conv2d(fused, w.fuse_gate_w, w.fuse_gate_b);
  if (gate_sigmoid) gate = sigmoid(gate);

  Tensor out = fused;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out.data[i] = fused.data[i] * gate.data[i] + m_r.data[i];
  }
  return out;
}

/// Fuse semantic, motion, and residual range-view features:
///   F_s = sigmoid(conv1x1(f_sem)) * f_motion
///   F_f = channel_softmax(conv1x1(avgpool(F_s))) * C
///   out = F_s * F_f + f_res
/// with C the channel count and F_f broadcast over space.
inline FeatureMap2D motion_semantic_fuse(const FeatureMap2D& f_sem,
                                         const FeatureMap2D& f_motion,
                                         const FeatureMap2D& f_res,
                                         const FusionWeights& w) {
  detail::require(f_sem.rank() == 3 && f_motion.rank() == 3 &&
                      f_res.rank() == 3,
                  "motion_semantic_fuse inputs must be (C, H, W)");
  detail::require(f_sem.same_shape(f_motion) && f_motion.same_shape(f_res),
                  "motion_semantic_fuse inputs must share one shape");
  detail::require(w.sem_gate_w.dim(1) == f_sem.dim(0),
                  "motion_semantic_fuse weights expect other channel counts");

  const std::size_t c = f_motion.dim(0);
  const Tensor gate = sigmoid(conv2d(f_sem, w.sem_gate_w, w.sem_gate_b));
  Tensor scored = f_motion;
  for (std::size_t i = 0; i < scored.numel(); ++i) {
    scored.data[i] = gate.data[i] * f_motion.data[i];
  }

  const Tensor pooled =
      channel_softmax(conv2d(global_avg_pool(scored), w.chan_w, w.chan_b));

  Tensor out = scored;
  const std::size_t plane = out.dim(1) * out.dim(2);
  for (std::size_t ci = 0; ci < c; ++ci) {
    const float scale =
        pooled.data[ci] * static_cast<float>(c);  // softmax * channel count
    for (std::size_t i = 0; i < plane; ++i) {
      out.data[ci * plane + i] =
          scored.data[ci * plane + i] * scale + f_res.data[ci * plane + i];
    }
  }
  return out;
}

/// Minimal BEV motion encoder block: halve the resolution, then two
/// padding-preserving 3x3 convolutions.
inline FeatureMap2D bev_encode(const FeatureMap2D& f_bev_motion,
                               const FusionWeights& w) {
  detail::require(f_bev_motion.rank() == 3, "bev_encode input must be (C,H,W)");
  detail::require(f_bev_motion.dim(1) >= 2 && f_bev_motion.dim(2) >= 2,
                  "bev_encode needs at least 2x2 spatial input");
  const Tensor pooled = max_pool2x2(f_bev_motion);
  return conv2d(conv2d(pooled, w.bev_conv1_w, w.bev_conv1_b), w.bev_conv2_w,
                w.bev_conv2_b);
}

}  // namespace crossview
