// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "crossview/core/types.hpp"
#include "crossview/errors.hpp"
#include "crossview/tensor/tensor.hpp"
#include "crossview/tensor/weights.hpp"

namespace crossview {

/// Axis-aligned voxelization parameters.
struct VoxelConfig {
  double voxel_size = 0.2;
  Eigen::Vector3d min_corner{-50.0, -50.0, -4.0};
  Eigen::Vector3d max_corner{50.0, 50.0, 2.0};

  void validate() const {
    if (!(voxel_size > 0.0)) throw ConfigError("voxel size must be > 0");
    for (int a = 0; a < 3; ++a) {
      if (!(max_corner[a] > min_corner[a])) {
        throw ConfigError("voxel bounds must satisfy max > min per axis");
      }
    }
  }

  std::array<std::int32_t, 3> grid_dims() const {
    std::array<std::int32_t, 3> dims;
    for (int a = 0; a < 3; ++a) {
      dims[a] = static_cast<std::int32_t>(
          std::ceil((max_corner[a] - min_corner[a]) / voxel_size));
    }
    return dims;
  }
};

/// Per-point feature rows aligned to a PointCloud by index.
struct PointFeatures {
  std::size_t channels = 0;
  std::vector<float> data;  ///< N x channels, row-major

  PointFeatures() = default;
  PointFeatures(std::size_t n, std::size_t c)
      : channels(c), data(n * c, 0.0f) {}

  std::size_t size() const { return channels == 0 ? 0 : data.size() / channels; }

  float at(std::size_t i, std::size_t c) const { return data[i * channels + c]; }
  float& at(std::size_t i, std::size_t c) { return data[i * channels + c]; }
};

/// Sparse voxel -> feature map plus the point -> voxel assignment that
/// produced it. Keys are flattened grid indices.
struct VoxelGrid {
  static constexpr std::int64_t kUnassigned = -1;

  std::size_t channels = 0;
  std::array<std::int32_t, 3> dims{0, 0, 0};
  std::unordered_map<std::int64_t, std::vector<float>> cells;
  std::vector<std::int64_t> point_to_voxel;

  std::int64_t key_of(std::int32_t ix, std::int32_t iy, std::int32_t iz) const {
    return (static_cast<std::int64_t>(ix) * dims[1] + iy) * dims[2] + iz;
  }

  std::array<std::int32_t, 3> unkey(std::int64_t key) const {
    const std::int64_t iz = key % dims[2];
    const std::int64_t iy = (key / dims[2]) % dims[1];
    const std::int64_t ix = key / (static_cast<std::int64_t>(dims[1]) * dims[2]);
    return {static_cast<std::int32_t>(ix), static_cast<std::int32_t>(iy),
            static_cast<std::int32_t>(iz)};
  }
};

/// Bucket points by floor((p - min) / voxel_size) and mean-pool member
/// features per occupied voxel. Out-of-bounds points stay unassigned.
inline VoxelGrid voxelize(const PointCloud& cloud, const PointFeatures& feats,
                          const VoxelConfig& cfg) {
  cfg.validate();
  if (feats.size() != cloud.size()) {
    throw ShapeError("features are not aligned to the cloud (" +
                     std::to_string(feats.size()) + " vs " +
                     std::to_string(cloud.size()) + ")");
  }
  VoxelGrid grid;
  grid.channels = feats.channels;
  grid.dims = cfg.grid_dims();
  grid.point_to_voxel.assign(cloud.size(), VoxelGrid::kUnassigned);

  std::unordered_map<std::int64_t, std::size_t> member_count;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    const double coords[3] = {p.x, p.y, p.z};
    std::array<std::int32_t, 3> cell;
    bool inside = true;
    for (int a = 0; a < 3; ++a) {
      const double rel = (coords[a] - cfg.min_corner[a]) / cfg.voxel_size;
      const auto idx = static_cast<std::int64_t>(std::floor(rel));
      if (idx < 0 || idx >= grid.dims[a]) {
        inside = false;
        break;
      }
      cell[a] = static_cast<std::int32_t>(idx);
    }
    if (!inside) continue;

    const std::int64_t key = grid.key_of(cell[0], cell[1], cell[2]);
    grid.point_to_voxel[i] = key;
    auto [it, fresh] = grid.cells.try_emplace(
        key, std::vector<float>(grid.channels, 0.0f));
    std::vector<float>& acc = it->second;
    for (std::size_t c = 0; c < grid.channels; ++c) {
      acc[c] += feats.at(i, c);
    }
    ++member_count[key];
  }

  for (auto& [key, acc] : grid.cells) {
    const auto n = static_cast<float>(member_count[key]);
    for (float& v : acc) v /= n;
  }
  return grid;
}

/// Submanifold sparse convolution: the output occupies exactly the input
/// voxels, and each output cell aggregates only occupied neighbours.
/// kernel: (C_out, C_in, k, k, k) with k in {1, 3}; bias: (C_out).
inline VoxelGrid sparse_conv(const VoxelGrid& grid, const Tensor& kernel,
                             const Tensor& bias) {
  detail::require(kernel.rank() == 5, "sparse_conv kernel must be 5D");
  const std::size_t c_out = kernel.dim(0);
  const std::size_t c_in = kernel.dim(1);
  const std::size_t k = kernel.dim(2);
  detail::require(kernel.dim(3) == k && kernel.dim(4) == k && (k == 1 || k == 3),
                  "sparse_conv kernel must be 1x1x1 or 3x3x3");
  detail::require(c_in == grid.channels, "sparse_conv channel mismatch");
  detail::require(bias.rank() == 1 && bias.dim(0) == c_out,
                  "sparse_conv bias must be (C_out)");

  VoxelGrid out;
  out.channels = c_out;
  out.dims = grid.dims;
  out.point_to_voxel = grid.point_to_voxel;

  const int pad = static_cast<int>(k) / 2;
  for (const auto& [key, feature] : grid.cells) {
    (void)feature;
    const auto [ix, iy, iz] = grid.unkey(key);
    std::vector<float> result(c_out);
    for (std::size_t co = 0; co < c_out; ++co) {
      double acc = bias.data[co];
      for (std::size_t ka = 0; ka < k; ++ka) {
        for (std::size_t kb = 0; kb < k; ++kb) {
          for (std::size_t kc = 0; kc < k; ++kc) {
            const std::int32_t nx = ix + static_cast<std::int32_t>(ka) - pad;
            const std::int32_t ny = iy + static_cast<std::int32_t>(kb) - pad;
            const std::int32_t nz = iz + static_cast<std::int32_t>(kc) - pad;
            if (nx < 0 || nx >= grid.dims[0] || ny < 0 || ny >= grid.dims[1] ||
                nz < 0 || nz >= grid.dims[2]) {
              continue;
            }
            const auto it = grid.cells.find(grid.key_of(nx, ny, nz));
            if (it == grid.cells.end()) continue;
            const std::vector<float>& nb = it->second;
            for (std::size_t ci = 0; ci < c_in; ++ci) {
              acc += static_cast<double>(
                         kernel.data[(((co * c_in + ci) * k + ka) * k + kb) * k +
                                     kc]) *
                     nb[ci];
            }
          }
        }
      }
      result[co] = static_cast<float>(acc);
    }
    out.cells.emplace(key, std::move(result));
  }
  return out;
}

/// Spatial/channel attention weights over C-channel voxel features.
struct ScamWeights {
  Tensor spatial_w, spatial_b;  ///< 3x3x3, C -> C
  Tensor channel_w, channel_b;  ///< 1x1x1, C -> C

  static ScamWeights zeros(std::size_t c) {
    ScamWeights w;
    w.spatial_w = Tensor({c, c, 3, 3, 3});
    w.spatial_b = Tensor({c});
    w.channel_w = Tensor({c, c, 1, 1, 1});
    w.channel_b = Tensor({c});
    return w;
  }

  static ScamWeights random(std::uint64_t seed, std::size_t c) {
    ScamWeights w = zeros(c);
    std::mt19937_64 rng(seed);
    w.spatial_w = random_tensor(w.spatial_w.shape, rng);
    w.spatial_b = random_tensor(w.spatial_b.shape, rng);
    w.channel_w = random_tensor(w.channel_w.shape, rng);
    w.channel_b = random_tensor(w.channel_b.shape, rng);
    return w;
  }

  TensorMap to_map() const {
    return TensorMap{{"scam.spatial.weight", spatial_w},
                     {"scam.spatial.bias", spatial_b},
                     {"scam.channel.weight", channel_w},
                     {"scam.channel.bias", channel_b}};
  }

  static ScamWeights from_map(const TensorMap& map) {
    auto get = [&](const std::string& name) -> const Tensor& {
      const auto it = map.find(name);
      if (it == map.end()) {
        throw FormatError("weight set is missing tensor '" + name + "'");
      }
      return it->second;
    };
    ScamWeights w;
    w.spatial_w = get("scam.spatial.weight");
    w.spatial_b = get("scam.spatial.bias");
    w.channel_w = get("scam.channel.weight");
    w.channel_b = get("scam.channel.bias");
    return w;
  }
};

/// Sparse spatial/channel attention: two sigmoid score grids (3x3x3 spatial,
/// 1x1x1 channel) multiply the input cell-wise, preserving occupancy.
inline VoxelGrid scam_forward(const VoxelGrid& grid, const ScamWeights& w) {
  const VoxelGrid spatial = sparse_conv(grid, w.spatial_w, w.spatial_b);
  const VoxelGrid channel = sparse_conv(grid, w.channel_w, w.channel_b);

  auto score = [](float v) -> float {
    return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
  };

  VoxelGrid out = grid;
  for (auto& [key, feature] : out.cells) {
    const std::vector<float>& f_s = spatial.cells.at(key);
    const std::vector<float>& f_c = channel.cells.at(key);
    for (std::size_t c = 0; c < out.channels; ++c) {
      feature[c] = feature[c] * score(f_s[c]) * score(f_c[c]);
    }
  }
  return out;
}

/// Scatter voxel features back onto points; unassigned points get zeros.
inline PointFeatures devoxelize(const VoxelGrid& grid, const PointCloud& cloud) {
  if (grid.point_to_voxel.size() != cloud.size()) {
    throw AlignmentError("voxel grid was built from a different cloud (" +
                         std::to_string(grid.point_to_voxel.size()) + " vs " +
                         std::to_string(cloud.size()) + " points)");
  }
  PointFeatures out(cloud.size(), grid.channels);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::int64_t key = grid.point_to_voxel[i];
    if (key == VoxelGrid::kUnassigned) continue;
    const std::vector<float>& f = grid.cells.at(key);
    for (std::size_t c = 0; c < grid.channels; ++c) out.at(i, c) = f[c];
  }
  return out;
}

/// One dense layer of the per-point feature path.
struct LinearLayer {
  Tensor weight;  ///< (out, in)
  Tensor bias;    ///< (out)
};

/// Per-point MLP: linear + sigmoid per layer.
inline PointFeatures mlp_forward(const PointFeatures& feats,
                                 const std::vector<LinearLayer>& layers) {
  PointFeatures cur = feats;
  for (const LinearLayer& layer : layers) {
    detail::require(layer.weight.rank() == 2 && layer.bias.rank() == 1 &&
                        layer.weight.dim(0) == layer.bias.dim(0),
                    "mlp layer weights must be (out, in) with (out) bias");
    detail::require(layer.weight.dim(1) == cur.channels,
                    "mlp layer input width mismatch");
    const std::size_t n = cur.size();
    const std::size_t out_c = layer.weight.dim(0);
    const std::size_t in_c = cur.channels;
    PointFeatures next(n, out_c);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < out_c; ++o) {
        double acc = layer.bias.data[o];
        for (std::size_t c = 0; c < in_c; ++c) {
          acc += static_cast<double>(layer.weight.data[o * in_c + c]) *
                 cur.at(i, c);
        }
        next.at(i, o) = static_cast<float>(1.0 / (1.0 + std::exp(-acc)));
      }
    }
    cur = std::move(next);
  }
  return cur;
}

/// Full refinement-stage parameter bundle: the per-point MLP path, the
/// voxel attention weights, and the classifier head.
struct RefineWeights {
  std::vector<LinearLayer> mlp;  ///< two layers: in -> hidden -> channels
  ScamWeights scam;
  LinearLayer head;  ///< (num_classes, 2 * channels) for concat fusion

  static RefineWeights random(std::uint64_t seed, std::size_t in_features,
                              std::size_t hidden, std::size_t channels,
                              std::size_t num_classes) {
    RefineWeights w;
    std::mt19937_64 rng(seed);
    w.mlp.push_back(LinearLayer{random_tensor({hidden, in_features}, rng),
                                random_tensor({hidden}, rng)});
    w.mlp.push_back(LinearLayer{random_tensor({channels, hidden}, rng),
                                random_tensor({channels}, rng)});
    w.scam = ScamWeights::zeros(channels);
    std::mt19937_64 scam_rng(seed + 1);
    w.scam.spatial_w = random_tensor(w.scam.spatial_w.shape, scam_rng);
    w.scam.spatial_b = random_tensor(w.scam.spatial_b.shape, scam_rng);
    w.scam.channel_w = random_tensor(w.scam.channel_w.shape, scam_rng);
    w.scam.channel_b = random_tensor(w.scam.channel_b.shape, scam_rng);
    w.head = LinearLayer{random_tensor({num_classes, 2 * channels}, rng),
                         random_tensor({num_classes}, rng)};
    return w;
  }

  TensorMap to_map() const {
    TensorMap map = scam.to_map();
    for (std::size_t i = 0; i < mlp.size(); ++i) {
      map.emplace("mlp." + std::to_string(i) + ".weight", mlp[i].weight);
      map.emplace("mlp." + std::to_string(i) + ".bias", mlp[i].bias);
    }
    map.emplace("head.weight", head.weight);
    map.emplace("head.bias", head.bias);
    return map;
  }

  static RefineWeights from_map(const TensorMap& map) {
    auto get = [&](const std::string& name) -> const Tensor& {
      const auto it = map.find(name);
      if (it == map.end()) {
        throw FormatError("weight set is missing tensor '" + name + "'");
      }
      return it->second;
    };
    RefineWeights w;
    w.scam = ScamWeights::from_map(map);
    for (std::size_t i = 0;; ++i) {
      const std::string base = "mlp." + std::to_string(i);
      if (map.find(base + ".weight") == map.end()) break;
      w.mlp.push_back(LinearLayer{get(base + ".weight"), get(base + ".bias")});
    }
    if (w.mlp.empty()) throw FormatError("weight set has no mlp layers");
    w.head = LinearLayer{get("head.weight"), get("head.bias")};
    return w;
  }
};

enum class HeadFusion { kConcat, kAdd };

/// Classifier head over the refined voxel path and the per-point MLP path.
/// kConcat stacks both feature sets; kAdd sums them (widths must match).
/// Output is (N, num_classes) scores; argmax is the predicted label.
inline PointFeatures refine_head(const PointFeatures& refined,
                                 const PointFeatures& mlp_path,
                                 const LinearLayer& head,
                                 HeadFusion fusion = HeadFusion::kConcat) {
  if (refined.size() != mlp_path.size()) {
    throw ShapeError("refine_head inputs must cover the same points");
  }
  detail::require(head.weight.rank() == 2 && head.bias.rank() == 1 &&
                      head.weight.dim(0) == head.bias.dim(0),
                  "head weights must be (classes, in) with (classes) bias");

  const std::size_t n = refined.size();
  const std::size_t classes = head.weight.dim(0);
  std::size_t in_c = 0;
  if (fusion == HeadFusion::kConcat) {
    in_c = refined.channels + mlp_path.channels;
  } else {
    detail::require(refined.channels == mlp_path.channels,
                    "additive head fusion needs equal feature widths");
    in_c = refined.channels;
  }
  detail::require(head.weight.dim(1) == in_c,
                  "head input width does not match the fused features");

  PointFeatures scores(n, classes);
  std::vector<double> fused(in_c);
  for (std::size_t i = 0; i < n; ++i) {
    if (fusion == HeadFusion::kConcat) {
      for (std::size_t c = 0; c < refined.channels; ++c) {
        fused[c] = refined.at(i, c);
      }
      for (std::size_t c = 0; c < mlp_path.channels; ++c) {
        fused[refined.channels + c] = mlp_path.at(i, c);
      }
    } else {
      for (std::size_t c = 0; c < in_c; ++c) {
        fused[c] = static_cast<double>(refined.at(i, c)) + mlp_path.at(i, c);
      }
    }
    for (std::size_t o = 0; o < classes; ++o) {
      double acc = head.bias.data[o];
      for (std::size_t c = 0; c < in_c; ++c) {
        acc += static_cast<double>(head.weight.data[o * in_c + c]) * fused[c];
      }
      scores.at(i, o) = static_cast<float>(acc);
    }
  }
  return scores;
}

}  // namespace crossview
