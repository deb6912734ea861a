// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "crossview/errors.hpp"

namespace crossview {

/// Dense row-major f32 tensor. All kernels below accumulate in double and
/// store in float, which keeps results reproducible against the scalar
/// reference implementations used by the tests.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s)
      : shape(std::move(s)), data(numel_of(shape), 0.0f) {}
  Tensor(std::vector<std::size_t> s, std::vector<float> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel_of(shape)) {
      throw ShapeError("tensor data does not match its shape");
    }
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           std::multiplies<>());
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    return Tensor(std::move(s));
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  // (c, y, x) accessors for rank-3 tensors
  float at3(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * shape[1] + y) * shape[2] + x];
  }
  float& at3(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * shape[1] + y) * shape[2] + x];
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

/// Four-neighbour bilinear fetch at continuous pixel coordinates.
/// Neighbours outside the image contribute zero, so a sample at or beyond
/// one full pixel outside the border is exactly 0, and integer coordinates
/// reproduce stored values exactly.
inline double sample_bilinear_pixel(const Tensor& src, std::size_t channel,
                                    double ix, double iy) {
  const long h = static_cast<long>(src.dim(1));
  const long w = static_cast<long>(src.dim(2));
  const long x0 = static_cast<long>(std::floor(ix));
  const long y0 = static_cast<long>(std::floor(iy));
  const double fx = ix - static_cast<double>(x0);
  const double fy = iy - static_cast<double>(y0);

  auto fetch = [&](long y, long x) -> double {
    if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
    return src.at3(channel, static_cast<std::size_t>(y),
                   static_cast<std::size_t>(x));
  };
  return (1.0 - fy) * ((1.0 - fx) * fetch(y0, x0) + fx * fetch(y0, x0 + 1)) +
         fy * ((1.0 - fx) * fetch(y0 + 1, x0) + fx * fetch(y0 + 1, x0 + 1));
}

}  // namespace detail

/// 2D cross-correlation, stride 1, zero padding that preserves H x W.
/// input: (C_in, H, W); kernel: (C_out, C_in, k, k) with k in {1, 3};
/// bias: (C_out).
inline Tensor conv2d(const Tensor& input, const Tensor& kernel,
                     const Tensor& bias) {
  detail::require(input.rank() == 3, "conv2d input must be (C, H, W)");
  detail::require(kernel.rank() == 4, "conv2d kernel must be (Co, Ci, k, k)");
  const std::size_t c_out = kernel.dim(0);
  const std::size_t c_in = kernel.dim(1);
  const std::size_t k = kernel.dim(2);
  detail::require(kernel.dim(3) == k && (k == 1 || k == 3),
                  "conv2d kernel must be 1x1 or 3x3");
  detail::require(input.dim(0) == c_in, "conv2d channel mismatch");
  detail::require(bias.rank() == 1 && bias.dim(0) == c_out,
                  "conv2d bias must be (C_out)");

  const std::size_t h = input.dim(1);
  const std::size_t w = input.dim(2);
  const int pad = static_cast<int>(k) / 2;

  Tensor out({c_out, h, w});
  for (std::size_t co = 0; co < c_out; ++co) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = bias.data[co];
        for (std::size_t ci = 0; ci < c_in; ++ci) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const long iy = static_cast<long>(y) + static_cast<long>(ky) - pad;
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long ix =
                  static_cast<long>(x) + static_cast<long>(kx) - pad;
              if (ix < 0 || ix >= static_cast<long>(w)) continue;
              acc += static_cast<double>(
                         kernel.data[((co * c_in + ci) * k + ky) * k + kx]) *
                     input.at3(ci, static_cast<std::size_t>(iy),
                               static_cast<std::size_t>(ix));
            }
          }
        }
        out.at3(co, y, x) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

inline Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (float& v : out.data) {
    v = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
  }
  return out;
}

/// Softmax across the channel axis of a (C, H, W) tensor, one distribution
/// per spatial site.
inline Tensor channel_softmax(const Tensor& x) {
  detail::require(x.rank() == 3, "channel_softmax input must be (C, H, W)");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out({c, h, w});
  std::vector<double> e(c);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t xx = 0; xx < w; ++xx) {
      double max_v = -std::numeric_limits<double>::infinity();
      for (std::size_t ci = 0; ci < c; ++ci) {
        max_v = std::max(max_v, static_cast<double>(x.at3(ci, y, xx)));
      }
      double sum = 0.0;
      for (std::size_t ci = 0; ci < c; ++ci) {
        e[ci] = std::exp(static_cast<double>(x.at3(ci, y, xx)) - max_v);
        sum += e[ci];
      }
      for (std::size_t ci = 0; ci < c; ++ci) {
        out.at3(ci, y, xx) = static_cast<float>(e[ci] / sum);
      }
    }
  }
  return out;
}

enum class ActivationKind { kSigmoid, kChannelSoftmax };

inline Tensor activations(const Tensor& x, ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kSigmoid:
      return sigmoid(x);
    case ActivationKind::kChannelSoftmax:
      return channel_softmax(x);
  }
  throw ConfigError("unknown activation kind");
}

/// 2x2 max pooling; spatial dims must be even.
inline Tensor max_pool2x2(const Tensor& x) {
  detail::require(x.rank() == 3, "max_pool2x2 input must be (C, H, W)");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  detail::require(h > 0 && w > 0 && h % 2 == 0 && w % 2 == 0,
                  "max_pool2x2 needs even spatial dims");
  Tensor out({c, h / 2, w / 2});
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t y = 0; y < h / 2; ++y) {
      for (std::size_t xx = 0; xx < w / 2; ++xx) {
        const float a = x.at3(ci, 2 * y, 2 * xx);
        const float b = x.at3(ci, 2 * y, 2 * xx + 1);
        const float d = x.at3(ci, 2 * y + 1, 2 * xx);
        const float e = x.at3(ci, 2 * y + 1, 2 * xx + 1);
        out.at3(ci, y, xx) = std::max(std::max(a, b), std::max(d, e));
      }
    }
  }
  return out;
}

/// Reduce each channel to its spatial mean: (C, H, W) -> (C, 1, 1).
inline Tensor global_avg_pool(const Tensor& x) {
  detail::require(x.rank() == 3, "global_avg_pool input must be (C, H, W)");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  detail::require(h > 0 && w > 0, "global_avg_pool needs nonempty input");
  Tensor out({c, 1, 1});
  for (std::size_t ci = 0; ci < c; ++ci) {
    double acc = 0.0;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t xx = 0; xx < w; ++xx) acc += x.at3(ci, y, xx);
    }
    out.at3(ci, 0, 0) = static_cast<float>(acc / static_cast<double>(h * w));
  }
  return out;
}

enum class PoolKind { kMax2x2, kGlobalAvg };

inline Tensor pool(const Tensor& x, PoolKind kind) {
  switch (kind) {
    case PoolKind::kMax2x2:
      return max_pool2x2(x);
    case PoolKind::kGlobalAvg:
      return global_avg_pool(x);
  }
  throw ConfigError("unknown pool kind");
}

/// Bilinear sampling of src (C, H, W) at normalized coordinates.
///
/// coords is (2, H', W'): channel 0 holds gx, channel 1 holds gy, both in
/// [-1, 1] with -1 the first and +1 the last pixel center (align-corners
/// convention). Everything outside the image is zero padding.
inline Tensor bilinear_sample(const Tensor& src, const Tensor& coords) {
  detail::require(src.rank() == 3, "bilinear_sample src must be (C, H, W)");
  detail::require(coords.rank() == 3 && coords.dim(0) == 2,
                  "bilinear_sample coords must be (2, H', W')");
  const std::size_t c = src.dim(0);
  const std::size_t oh = coords.dim(1), ow = coords.dim(2);
  const double sx = 0.5 * static_cast<double>(src.dim(2) - 1);
  const double sy = 0.5 * static_cast<double>(src.dim(1) - 1);

  Tensor out({c, oh, ow});
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      const double ix = (static_cast<double>(coords.at3(0, y, x)) + 1.0) * sx;
      const double iy = (static_cast<double>(coords.at3(1, y, x)) + 1.0) * sy;
      for (std::size_t ci = 0; ci < c; ++ci) {
        out.at3(ci, y, x) = static_cast<float>(
            detail::sample_bilinear_pixel(src, ci, ix, iy));
      }
    }
  }
  return out;
}

/// Bilinearly resize a (C, H, W) tensor. Source coordinates are computed in
/// double per target pixel, so an unchanged size is an exact copy.
inline Tensor bilinear_resize(const Tensor& src, std::size_t out_h,
                              std::size_t out_w) {
  detail::require(src.rank() == 3, "bilinear_resize src must be (C, H, W)");
  detail::require(out_h > 0 && out_w > 0, "bilinear_resize target is empty");
  const std::size_t c = src.dim(0), h = src.dim(1), w = src.dim(2);
  if (out_h == h && out_w == w) return src;

  const double step_x =
      out_w > 1 ? static_cast<double>(w - 1) / static_cast<double>(out_w - 1)
                : 0.0;
  const double step_y =
      out_h > 1 ? static_cast<double>(h - 1) / static_cast<double>(out_h - 1)
                : 0.0;

  Tensor out({c, out_h, out_w});
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      const double ix = step_x * static_cast<double>(x);
      const double iy = step_y * static_cast<double>(y);
      for (std::size_t ci = 0; ci < c; ++ci) {
        out.at3(ci, y, x) = static_cast<float>(
            detail::sample_bilinear_pixel(src, ci, ix, iy));
      }
    }
  }
  return out;
}

}  // namespace crossview
