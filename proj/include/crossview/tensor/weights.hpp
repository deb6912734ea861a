// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossview/errors.hpp"
#include "crossview/tensor/tensor.hpp"

namespace crossview {

/// Named weight tensors, ordered by name so serialization is deterministic.
using TensorMap = std::map<std::string, Tensor>;

/// Write tensors as a JSON manifest plus a raw little-endian f32 blob.
/// The blob sits next to the manifest under the manifest's stem + ".bin".
inline void save_weights(const std::filesystem::path& manifest_path,
                         const TensorMap& tensors) {
  std::filesystem::path blob_path = manifest_path;
  blob_path.replace_extension(".bin");

  nlohmann::json manifest;
  manifest["blob"] = blob_path.filename().string();
  nlohmann::json entries = nlohmann::json::array();

  std::vector<float> blob;
  for (const auto& [name, tensor] : tensors) {
    nlohmann::json entry;
    entry["name"] = name;
    entry["shape"] = tensor.shape;
    entry["offset"] = blob.size() * sizeof(float);
    entries.push_back(entry);
    blob.insert(blob.end(), tensor.data.begin(), tensor.data.end());
  }
  manifest["tensors"] = entries;
  manifest["blob_bytes"] = blob.size() * sizeof(float);

  std::ofstream blob_out(blob_path, std::ios::binary | std::ios::trunc);
  if (!blob_out.is_open()) {
    throw IoError("cannot write weight blob: " + blob_path.string());
  }
  blob_out.write(reinterpret_cast<const char*>(blob.data()),
                 static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (!blob_out) throw IoError("short write: " + blob_path.string());

  std::ofstream manifest_out(manifest_path, std::ios::trunc);
  if (!manifest_out.is_open()) {
    throw IoError("cannot write weight manifest: " + manifest_path.string());
  }
  manifest_out << manifest.dump(2) << '\n';
}

/// Load tensors written by save_weights. Throws FormatError when the
/// manifest disagrees with the blob (total size, offsets, shapes).
inline TensorMap load_weights(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in.is_open()) {
    throw IoError("cannot open weight manifest: " + manifest_path.string());
  }
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed weight manifest: " + std::string(e.what()));
  }
  if (!manifest.contains("blob") || !manifest.contains("tensors") ||
      !manifest.contains("blob_bytes")) {
    throw FormatError("weight manifest is missing required fields");
  }

  const std::filesystem::path blob_path =
      manifest_path.parent_path() / manifest["blob"].get<std::string>();
  std::ifstream blob_in(blob_path, std::ios::binary | std::ios::ate);
  if (!blob_in.is_open()) {
    throw IoError("cannot open weight blob: " + blob_path.string());
  }
  const auto blob_size = static_cast<std::size_t>(blob_in.tellg());
  blob_in.seekg(0, std::ios::beg);
  if (manifest["blob_bytes"].get<std::size_t>() != blob_size) {
    throw FormatError("weight manifest declares " +
                      std::to_string(manifest["blob_bytes"].get<std::size_t>()) +
                      " blob bytes but the blob has " +
                      std::to_string(blob_size));
  }
  std::vector<float> blob(blob_size / sizeof(float));
  if (blob_size % sizeof(float) != 0) {
    throw FormatError("weight blob size is not a multiple of 4");
  }
  if (!blob.empty()) {
    blob_in.read(reinterpret_cast<char*>(blob.data()),
                 static_cast<std::streamsize>(blob_size));
    if (!blob_in) throw IoError("cannot read weight blob: " + blob_path.string());
  }

  TensorMap tensors;
  try {
    for (const auto& entry : manifest["tensors"]) {
      const auto name = entry["name"].get<std::string>();
      const auto shape = entry["shape"].get<std::vector<std::size_t>>();
      const auto offset = entry["offset"].get<std::size_t>();
      const std::size_t count = Tensor::numel_of(shape);
      if (offset % sizeof(float) != 0 ||
          offset + count * sizeof(float) > blob_size) {
        throw FormatError("tensor '" + name + "' exceeds the weight blob");
      }
      const std::size_t begin = offset / sizeof(float);
      tensors.emplace(name,
                      Tensor(shape, {blob.begin() + begin,
                                     blob.begin() + begin + count}));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed weight manifest entry: " +
                      std::string(e.what()));
  }
  return tensors;
}

/// Gaussian-filled tensor from a caller-owned generator.
inline Tensor random_tensor(std::vector<std::size_t> shape,
                            std::mt19937_64& rng, double stddev = 0.1) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (float& v : t.data) v = static_cast<float>(dist(rng));
  return t;
}

}  // namespace crossview
