// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "crossview/errors.hpp"
#include "crossview/io/container.hpp"

namespace crossview {

namespace detail {

inline void write_png(const std::filesystem::path& path, int w, int h,
                      int color_type, int bytes_per_pixel,
                      const std::vector<unsigned char>& pixels) {
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw IoError("cannot open for writing: " + path.string());

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng write failed: " + path.string());
  }

  png_init_io(png, fp);
  png_set_compression_level(png, 6);  // pinned for reproducible bytes
  png_set_IHDR(png, info, static_cast<png_uint_32>(w),
               static_cast<png_uint_32>(h), 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) {
    rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(
        pixels.data() + static_cast<std::size_t>(y) * w * bytes_per_pixel);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace detail

inline void write_png_gray8(const std::filesystem::path& path, int w, int h,
                            const std::vector<unsigned char>& pixels) {
  detail::write_png(path, w, h, PNG_COLOR_TYPE_GRAY, 1, pixels);
}

inline void write_png_rgb8(const std::filesystem::path& path, int w, int h,
                           const std::vector<unsigned char>& pixels) {
  detail::write_png(path, w, h, PNG_COLOR_TYPE_RGB, 3, pixels);
}

enum class PngStyle { kGrayscale, kColormap };

namespace detail {

// Piecewise-linear jet-style ramp.
inline void colormap(double t, unsigned char rgb[3]) {
  auto clamp01 = [](double v) { return std::min(1.0, std::max(0.0, v)); };
  rgb[0] = static_cast<unsigned char>(
      std::lround(255.0 * clamp01(1.5 - std::abs(4.0 * t - 3.0))));
  rgb[1] = static_cast<unsigned char>(
      std::lround(255.0 * clamp01(1.5 - std::abs(4.0 * t - 2.0))));
  rgb[2] = static_cast<unsigned char>(
      std::lround(255.0 * clamp01(1.5 - std::abs(4.0 * t - 1.0))));
}

}  // namespace detail

/// Export one channel of a flat container as an 8-bit PNG, min-max
/// normalized over that channel. A constant channel renders black.
inline void export_channel_png(const FlatImage& img, std::uint32_t channel,
                               const std::filesystem::path& path,
                               PngStyle style) {
  if (channel >= img.c) throw ShapeError("channel out of range");
  const std::size_t plane = img.plane_size();
  const float* src = img.data.data() + channel * plane;

  float lo = src[0], hi = src[0];
  for (std::size_t i = 1; i < plane; ++i) {
    lo = std::min(lo, src[i]);
    hi = std::max(hi, src[i]);
  }
  const double scale = hi > lo ? 1.0 / (static_cast<double>(hi) - lo) : 0.0;

  if (style == PngStyle::kGrayscale) {
    std::vector<unsigned char> pixels(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      pixels[i] = static_cast<unsigned char>(
          std::lround(255.0 * (static_cast<double>(src[i]) - lo) * scale));
    }
    write_png_gray8(path, static_cast<int>(img.w), static_cast<int>(img.h),
                    pixels);
  } else {
    std::vector<unsigned char> pixels(plane * 3);
    for (std::size_t i = 0; i < plane; ++i) {
      detail::colormap((static_cast<double>(src[i]) - lo) * scale,
                       &pixels[i * 3]);
    }
    write_png_rgb8(path, static_cast<int>(img.w), static_cast<int>(img.h),
                   pixels);
  }
}

}  // namespace crossview
