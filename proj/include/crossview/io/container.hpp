// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "crossview/errors.hpp"

namespace crossview {

/// Shared on-disk container for projected images, residual maps, index
/// tables, and coordinate maps: a 16-byte header (magic "FMP1", then h, w, c
/// as little-endian u32) followed by c planes of h*w little-endian f32.
struct FlatImage {
  std::uint32_t h = 0;
  std::uint32_t w = 0;
  std::uint32_t c = 0;
  std::vector<float> data;  ///< c planes, each h*w row-major

  FlatImage() = default;
  FlatImage(std::uint32_t h_, std::uint32_t w_, std::uint32_t c_)
      : h(h_), w(w_), c(c_),
        data(static_cast<std::size_t>(h_) * w_ * c_, 0.0f) {}

  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }

  float at(std::uint32_t channel, std::uint32_t row, std::uint32_t col) const {
    return data[channel * plane_size() + static_cast<std::size_t>(row) * w + col];
  }
  float& at(std::uint32_t channel, std::uint32_t row, std::uint32_t col) {
    return data[channel * plane_size() + static_cast<std::size_t>(row) * w + col];
  }
};

inline constexpr char kFlatImageMagic[4] = {'F', 'M', 'P', '1'};

inline void save_flat_image(const std::filesystem::path& path,
                            const FlatImage& img) {
  if (img.data.size() != img.plane_size() * img.c) {
    throw ShapeError("flat image data does not match its header");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.is_open()) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out.write(kFlatImageMagic, 4);
  const std::uint32_t dims[3] = {img.h, img.w, img.c};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size() * sizeof(float)));
  if (!out) throw IoError("short write: " + path.string());
}

inline FlatImage load_flat_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in.is_open()) throw IoError("cannot open: " + path.string());
  const std::streamsize size = in.tellg();
  in.seekg(0, std::ios::beg);
  if (size < 16) throw FormatError("truncated container: " + path.string());

  char magic[4];
  std::uint32_t dims[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (std::memcmp(magic, kFlatImageMagic, 4) != 0) {
    throw FormatError("unknown container magic: " + path.string());
  }
  FlatImage img;
  img.h = dims[0];
  img.w = dims[1];
  img.c = dims[2];
  const std::size_t expect = img.plane_size() * img.c;
  if (static_cast<std::size_t>(size) != 16 + expect * sizeof(float)) {
    throw FormatError("container payload does not match header: " +
                      path.string());
  }
  img.data.resize(expect);
  if (expect > 0) {
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(expect * sizeof(float)));
  }
  if (!in) throw IoError("cannot read: " + path.string());
  return img;
}

}  // namespace crossview
